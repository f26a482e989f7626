from fracdnn.network import HyperParams


def make_hyper(**kw):
    base = dict(gamma=0.5, tau=0.2, n_layers=5)
    base.update(kw)
    return HyperParams(**base)

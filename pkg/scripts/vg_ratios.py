"""Compare first/last-layer gradient norms for plain, residual and fractional
networks trained with steepest descent on the synthetic 20-class data."""
import argparse

from fracdnn import HyperParams, TrainConfig, generate_perfume_standin
from fracdnn.optimizer import OptConfig
from fracdnn.trainer import median_layer_ratio, vanishing_gradient_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--layers", type=int, default=70)
    ap.add_argument("--gamma", type=float, default=0.9)
    ap.add_argument("--iters", type=int, default=100)
    ap.add_argument("--per-class", type=int, default=28)
    ap.add_argument("--backward", default="exact", choices=["exact", "paper"])
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()
    print("seed  fractional  residual  plain")
    for seed in range(args.seeds):
        data = generate_perfume_standin(args.per_class, 500 + seed)
        cfg = TrainConfig(hyper=HyperParams(gamma=args.gamma, n_layers=args.layers), m1=1,
                          m2=args.iters, batch_fraction=1.0, seed=seed,
                          backward=args.backward, opt=OptConfig(grad_tol=0.0))
        traces = vanishing_gradient_experiment(data, args.layers, config=cfg)
        r = {m: median_layer_ratio(t) for m, t in traces.items()}
        print(f"{seed:4d}  {r['fractional']:10.4g}  {r['residual']:8.4g}  {r['plain']:.4g}")


if __name__ == "__main__":
    main()

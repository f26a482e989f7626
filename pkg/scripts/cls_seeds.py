"""Train and test on CLS data over several seeds and print accuracies."""
import argparse
import time

from fracdnn import HyperParams, TrainConfig, generate_cls, test, train


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--mode", default="fractional")
    args = ap.parse_args()
    hyper = HyperParams(gamma=0.1, tau=0.2, n_layers=5, mode=args.mode,
                        xi_W=1e-1, xi_K=1e2, xi_b=1e-2)
    for seed in range(args.seeds):
        t0 = time.perf_counter()
        tr, te = generate_cls(args.n, 1000 + 2 * seed), generate_cls(args.n, 1001 + 2 * seed)
        model = train(tr, TrainConfig(hyper=hyper, m1=6, m2=30, seed=seed))
        _, a_te = test(model, te)
        print(f"seed {seed}: train {model.summary['alpha_train_full']:.2f}%  "
              f"test {a_te:.2f}%  ({time.perf_counter() - t0:.1f}s)")


if __name__ == "__main__":
    main()

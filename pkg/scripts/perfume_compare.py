"""Fractional vs residual accuracy on perfume-style CSVs (or the synthetic
stand-in when no files are given)."""
import argparse
from dataclasses import replace

from fracdnn import HyperParams, TrainConfig, generate_perfume_standin, test, train
from fracdnn.data import load_csv, train_test_split


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--train-csv")
    ap.add_argument("--test-csv")
    ap.add_argument("--m1", type=int, default=567)
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()
    if args.train_csv and args.test_csv:
        tr = load_csv(args.train_csv)
        te = load_csv(args.test_csv, class_names=tr.class_names)
    else:
        print("no CSVs given; using the synthetic stand-in")
        tr, te = train_test_split(generate_perfume_standin(40, 77), 560, 77)
    hyper = HyperParams(gamma=0.9, tau=0.2, n_layers=35, xi_W=1e-8, xi_K=0.0, xi_b=0.0)
    for seed in range(args.seeds):
        acc = {}
        for mode in ("fractional", "residual"):
            cfg = TrainConfig(hyper=replace(hyper, mode=mode), m1=args.m1, m2=15, seed=seed)
            acc[mode] = test(train(tr, cfg), te)[1]
        print(f"seed {seed}: fractional {acc['fractional']:.2f}%  residual {acc['residual']:.2f}%")


if __name__ == "__main__":
    main()

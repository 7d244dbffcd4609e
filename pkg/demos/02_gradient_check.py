"""Finite-difference verification of the backward pass.

Runs the full-model gradient check on tiny synthetic graphs: every
parameter coordinate is perturbed by +-1e-5 and the central difference of
the training loss is compared against the reverse-mode gradient. Identity
activations keep the loss smooth; a relu variant probes a random (almost
surely kink-free) operating point.
"""

from edgetensor.gradcheck import model_gradcheck


def run(label, **kwargs):
    ok, report = model_gradcheck(**kwargs)
    print(f"{label}:")
    for name, worst in sorted(report.items()):
        print(f"  {name:<12s} max rel err {worst:.3e}")
    print(f"  -> {'PASSED' if ok else 'FAILED'}")
    return ok


def main():
    all_ok = True
    all_ok &= run("et_gcn (identity)", model_kind="et_gcn", seed=0)
    all_ok &= run("et_gat (identity)", model_kind="et_gat", seed=0)
    all_ok &= run("et_gcn (relu)", model_kind="et_gcn", seed=0,
                  activation="relu", n_per_block=6)
    print(f"\noverall: {'all gradients verified' if all_ok else 'FAILURE'}")


if __name__ == "__main__":
    main()

"""Watch the two schedulers pick threads on an always-runnable workload.

Three objects spin forever; two have base priority 1, one has 10. Under
round-robin the trio alternates exactly. Under priority scheduling the
high-priority spinner dominates, but waiting time counts as priority
(aging), so the low-priority spinners are pulled in at a steady beat
instead of starving.

Usage: python demos/scheduling_fairness.py
"""

from collections import Counter

from smm import parse_model, run_model

SPINNERS = """
class Spinner { }

op Spinner.spin(): Void {
w:
  goto w;
}

setup {
  a: Spinner active spin prio 1;
  b: Spinner active spin prio 1;
  c: Spinner active spin prio 10;
}
"""

NAMES = {0: "a(prio 1)", 1: "b(prio 1)", 2: "c(prio 10)"}


def run_for(scheduler: str, steps: int) -> list[int]:
    model = parse_model(SPINNERS)
    picks: list[int] = []
    run_model(model, scheduler=scheduler, max_steps=steps,
              on_step=lambda t, oid, tid, pc, a: picks.append(tid))
    return picks


def show(scheduler: str, picks: list[int]) -> None:
    glyphs = "".join("abc"[tid] for tid in picks)
    print(f"{scheduler}: {glyphs}")
    counts = Counter(picks)
    share = ", ".join(f"{NAMES[tid]}: {counts[tid]}" for tid in sorted(counts))
    print(f"  selections over {len(picks)} steps -> {share}\n")


def main() -> None:
    show("rr  ", run_for("rr", 45))
    picks = run_for("prio", 45)
    show("prio", picks)
    low_steps = [k for k, tid in enumerate(picks) if tid == 0]
    gaps = {j - i for i, j in zip(low_steps, low_steps[1:])}
    print(f"under prio, spinner a runs at steps {low_steps}: it needs "
          f"{low_steps[0]} steps of aging to catch base priority 10, then "
          f"recurs every {sorted(gaps)} steps.")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Convert a downloaded HAR dataset into per-trial CSV files plus a manifest.

    prepare_dataset.py mhealth  MHEALTHDATASET/     out/mhealth
    prepare_dataset.py uschad   USC-HAD/            out/uschad
    prepare_dataset.py utd1     UTD-MHAD/Inertial/  out/utd1
    prepare_dataset.py utd2     UTD-MHAD/Inertial/  out/utd2

Each trial becomes one headerless CSV (one row per sample, one column per
channel). The manifest is the matching template from manifests/ with
trial_sources filled in, written to out/manifest.toml. USC-HAD and UTD-MHAD
need scipy for reading .mat files.
"""

import argparse
import re
import sys
from pathlib import Path

TEMPLATES = Path(__file__).resolve().parent.parent / "manifests"


def mhealth_trials(src):
    """Maximal runs of one nonzero label in each subject log."""
    for log in sorted(src.glob("mHealth_subject*.log"), key=lambda p: int(re.findall(r"\d+", p.name)[-1])):
        subject = "subject" + re.findall(r"\d+", log.name)[-1]
        run, label, index = [], None, 0
        for line in log.read_text().splitlines():
            values = line.split()
            if len(values) != 24:
                continue
            lab = int(float(values[-1]))
            if lab != label and run:
                if label != 0:
                    yield subject, label, f"{subject}-a{label}-{index}", run
                    index += 1
                run = []
            label = lab
            run.append(values[:-1])
        if run and label != 0:
            yield subject, label, f"{subject}-a{label}-{index}", run


def load_mat(path, key):
    from scipy.io import loadmat

    return loadmat(path)[key]


def uschad_trials(src):
    for mat in sorted(src.glob("Subject*/a*t*.mat")):
        m = re.fullmatch(r"a(\d+)t(\d+)\.mat", mat.name)
        if not m:
            continue
        subject = mat.parent.name.lower()
        activity, trial = int(m.group(1)), int(m.group(2))
        rows = load_mat(mat, "sensor_readings")
        yield subject, activity, f"{subject}-a{activity}-t{trial}", [[repr(float(v)) for v in r] for r in rows]


def utd_trials(src, actions):
    for mat in sorted(src.glob("a*_s*_t*_inertial.mat")):
        m = re.fullmatch(r"a(\d+)_s(\d+)_t(\d+)_inertial\.mat", mat.name)
        if not m or int(m.group(1)) not in actions:
            continue
        action, subject, trial = (int(g) for g in m.groups())
        rows = load_mat(mat, "d_iner")
        yield f"s{subject}", action, f"s{subject}-a{action}-t{trial}", [[repr(float(v)) for v in r] for r in rows]


DATASETS = {
    "mhealth": ("mhealth.toml", mhealth_trials),
    "uschad": ("uschad.toml", uschad_trials),
    "utd1": ("utd1.toml", lambda src: utd_trials(src, range(1, 22))),
    "utd2": ("utd2.toml", lambda src: utd_trials(src, range(22, 28))),
}


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("dataset", choices=sorted(DATASETS))
    parser.add_argument("source", type=Path)
    parser.add_argument("out", type=Path)
    args = parser.parse_args()

    template_name, trials = DATASETS[args.dataset]
    template = (TEMPLATES / template_name).read_text()
    if "trial_sources = []" not in template:
        sys.exit(f"{template_name}: expected an empty trial_sources list")

    trial_dir = args.out / "trials"
    trial_dir.mkdir(parents=True, exist_ok=True)
    sources = []
    for subject, activity, trial_id, rows in trials(args.source):
        path = trial_dir / f"{trial_id}.csv"
        path.write_text("".join(",".join(r) + "\n" for r in rows))
        sources.append(
            f'  {{ subject_id = "{subject}", activity_id = {activity}, '
            f'trial_id = "{trial_id}", path = "trials/{trial_id}.csv" }},'
        )
    if not sources:
        sys.exit(f"no trials found under {args.source}")

    manifest = template.replace("trial_sources = []", "trial_sources = [\n" + "\n".join(sources) + "\n]")
    (args.out / "manifest.toml").write_text(manifest)
    print(f"{len(sources)} trials written to {args.out}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Prepare the evaluation datasets used by the acceptance suite.

Writes normalized CSVs (comma-delimited, features first, label name last, no
header) into the output directory. Iris and wine ship with scikit-learn and
are exported directly. Every other dataset must be supplied as raw files in
--raw-dir; this script only reshapes them, it never downloads anything.

Expected raw files (UCI distribution names):
  ecoli.data                      -> ecoli.csv (sequence-name column dropped)
  letter-recognition.data         -> letter-train.csv/letter-test.csv (16000/4000)
  sat.trn, sat.tst                -> satimage-train.csv/satimage-test.csv
  shuttle.trn, shuttle.tst        -> shuttle-train.csv/shuttle-test.csv
  xa[a-i].dat (9 parts)           -> vehicle.csv
  vowel-context.data              -> vowel-train.csv/vowel-test.csv (speaker split)
  wine.data                       -> used only if scikit-learn is unavailable
  mnist/{train,t10k}-{images,labels}-idx[13]-ubyte[.gz] -> mnist/ (decompressed)
"""

import argparse
import gzip
import shutil
import sys
from pathlib import Path


def write_rows(path: Path, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as out:
        for features, label in rows:
            out.write(",".join(repr(float(v)) for v in features))
            out.write("," + str(label) + "\n")
    print(f"wrote {path} ({sum(1 for _ in path.open())} rows)")


def export_sklearn(out_dir: Path) -> bool:
    try:
        from sklearn.datasets import load_iris, load_wine
    except ImportError:
        print("scikit-learn not available; skipping iris/wine export", file=sys.stderr)
        return False
    for name, loader in [("iris", load_iris), ("wine", load_wine)]:
        bundle = loader()
        rows = [
            (features, bundle.target_names[target])
            for features, target in zip(bundle.data, bundle.target)
        ]
        write_rows(out_dir / f"{name}.csv", rows)
    return True


def read_fields(path: Path):
    for line in path.open():
        fields = line.split()
        if fields:
            yield fields


def prepare_ecoli(raw: Path, out_dir: Path) -> None:
    rows = [(f[1:-1], f[-1]) for f in read_fields(raw / "ecoli.data")]
    write_rows(out_dir / "ecoli.csv", rows)


def prepare_letter(raw: Path, out_dir: Path) -> None:
    rows = []
    for line in (raw / "letter-recognition.data").open():
        fields = line.strip().split(",")
        if len(fields) == 17:
            rows.append((fields[1:], fields[0]))
    write_rows(out_dir / "letter-train.csv", rows[:16000])
    write_rows(out_dir / "letter-test.csv", rows[16000:])


def prepare_satimage(raw: Path, out_dir: Path) -> None:
    for src, dst in [("sat.trn", "satimage-train.csv"), ("sat.tst", "satimage-test.csv")]:
        rows = [(f[:-1], "c" + f[-1]) for f in read_fields(raw / src)]
        write_rows(out_dir / dst, rows)


def prepare_shuttle(raw: Path, out_dir: Path) -> None:
    for src, dst in [("shuttle.trn", "shuttle-train.csv"), ("shuttle.tst", "shuttle-test.csv")]:
        rows = [(f[:-1], "c" + f[-1]) for f in read_fields(raw / src)]
        write_rows(out_dir / dst, rows)


def prepare_vehicle(raw: Path, out_dir: Path) -> None:
    rows = []
    for part in sorted(raw.glob("xa*.dat")):
        rows.extend((f[:-1], f[-1]) for f in read_fields(part))
    if not rows:
        raise FileNotFoundError(str(raw / "xa*.dat"))
    write_rows(out_dir / "vehicle.csv", rows)


def prepare_vowel(raw: Path, out_dir: Path) -> None:
    # vowel-context.data: train/test flag, speaker, sex, 10 features, class
    train, test = [], []
    for f in read_fields(raw / "vowel-context.data"):
        row = (f[3:13], "v" + f[13])
        (train if f[0] == "0" else test).append(row)
    write_rows(out_dir / "vowel-train.csv", train)
    write_rows(out_dir / "vowel-test.csv", test)


def prepare_wine_raw(raw: Path, out_dir: Path) -> None:
    rows = []
    for line in (raw / "wine.data").open():
        fields = line.strip().split(",")
        if len(fields) == 14:
            rows.append((fields[1:], "class_" + fields[0]))
    write_rows(out_dir / "wine.csv", rows)


def prepare_mnist(raw: Path, out_dir: Path) -> None:
    names = [
        "train-images-idx3-ubyte",
        "train-labels-idx1-ubyte",
        "t10k-images-idx3-ubyte",
        "t10k-labels-idx1-ubyte",
    ]
    found = 0
    for name in names:
        dst = out_dir / "mnist" / name
        plain, packed = raw / "mnist" / name, raw / "mnist" / (name + ".gz")
        if not plain.exists():
            plain, packed = raw / name, raw / (name + ".gz")
        dst.parent.mkdir(parents=True, exist_ok=True)
        if plain.exists():
            shutil.copyfile(plain, dst)
        elif packed.exists():
            with gzip.open(packed, "rb") as src, dst.open("wb") as out:
                shutil.copyfileobj(src, out)
        else:
            continue
        print(f"wrote {dst}")
        found += 1
    if found not in (0, 4):
        raise FileNotFoundError("incomplete mnist file set under " + str(raw))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", type=Path, default=Path("data"))
    parser.add_argument("--raw-dir", type=Path, default=None,
                        help="directory holding raw dataset files to normalize")
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    have_sklearn = export_sklearn(args.out_dir)

    steps = {
        "ecoli": prepare_ecoli,
        "letter": prepare_letter,
        "satimage": prepare_satimage,
        "shuttle": prepare_shuttle,
        "vehicle": prepare_vehicle,
        "vowel": prepare_vowel,
        "mnist": prepare_mnist,
    }
    if not have_sklearn:
        steps["wine"] = prepare_wine_raw

    missing = []
    if args.raw_dir is None:
        missing = sorted(steps)
    else:
        for name, step in sorted(steps.items()):
            try:
                step(args.raw_dir, args.out_dir)
            except FileNotFoundError as e:
                print(f"{name}: raw file not found ({e})", file=sys.stderr)
                missing.append(name)

    if missing:
        print("not prepared (raw files not supplied): " + ", ".join(missing),
              file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())

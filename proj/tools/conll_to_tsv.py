#!/usr/bin/env python3
"""Convert SemEval-2020 Task 9 (SentiMix) CoNLL files to mixsent TSV.

Input blocks look like

    meta\t<id>\t<label>
    <token>\t<language tag>
    ...
    <blank line>

The label is optional (test files); missing labels become "_". Tokens are
joined with single spaces; "@" and "#" are glued to the following token
unless --keep-split is given.
"""

import argparse
import sys


def blocks(lines):
    block = []
    for raw in lines:
        line = raw.rstrip("\r\n")
        if not line.strip():
            if block:
                yield block
                block = []
            continue
        block.append(line)
    if block:
        yield block


def convert_block(block, glue, lineno_hint):
    head = block[0].split("\t")
    if head[0] != "meta" or len(head) < 2:
        raise ValueError(f"block {lineno_hint}: expected 'meta<TAB>id[<TAB>label]', got {block[0]!r}")
    uid = head[1].strip()
    label = head[2].strip() if len(head) > 2 and head[2].strip() else "_"
    tokens = []
    pending = ""
    for line in block[1:]:
        tok = line.split("\t")[0].strip()
        if not tok:
            continue
        if glue and tok in ("@", "#"):
            pending += tok
            continue
        tokens.append(pending + tok)
        pending = ""
    if pending:
        tokens.append(pending)
    text = " ".join(tokens).replace("\t", " ")
    return f"{uid}\t{label}\t{text}"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("input", help="CoNLL file, '-' for stdin")
    ap.add_argument("--out", default="-", help="TSV output, '-' for stdout")
    ap.add_argument("--keep-split", action="store_true", help="do not glue @ and # to the next token")
    args = ap.parse_args(argv)

    src = sys.stdin if args.input == "-" else open(args.input, encoding="utf-8")
    rows = []
    try:
        for n, block in enumerate(blocks(src), start=1):
            rows.append(convert_block(block, not args.keep_split, n))
    except ValueError as e:
        print(f"conll_to_tsv: {e}", file=sys.stderr)
        return 3
    finally:
        if src is not sys.stdin:
            src.close()

    out = sys.stdout if args.out == "-" else open(args.out, "w", encoding="utf-8")
    try:
        for row in rows:
            out.write(row + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())

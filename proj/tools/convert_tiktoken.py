#!/usr/bin/env python3
# Copyright 2026 The choicegate Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Converts a .tiktoken rank file into a choicegate vocabulary JSON.

With --keep-substrings-of, only tokens occurring inside the given text files
(plus printable ASCII characters and the words Yes/No) are kept, which keeps
the file small while tokenizing those texts exactly as the full table would
under greedy longest match.
"""

import argparse
import base64
import json
import string


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("tiktoken")
    ap.add_argument("out")
    ap.add_argument("--eos-id", type=int, default=100257)
    ap.add_argument("--keep-substrings-of", nargs="*", default=[])
    args = ap.parse_args()

    corpus = []
    for path in args.keep_substrings_of:
        with open(path, encoding="utf-8") as f:
            corpus.extend(line.rstrip("\n") for line in f if line.strip())
    keep_always = set(string.printable.strip()) | {" ", "Yes", "No"}

    tokens = {}
    with open(args.tiktoken, "rb") as f:
        for line in f:
            if not line.strip():
                continue
            b64, rank = line.split()
            try:
                text = base64.b64decode(b64).decode("utf-8")
            except UnicodeDecodeError:
                continue  # partial code points cannot be JSON keys
            rank = int(rank)
            if rank == args.eos_id or text in tokens:
                continue
            if corpus and text not in keep_always and not any(text in c for c in corpus):
                continue
            tokens[text] = rank

    with open(args.out, "w", encoding="utf-8") as f:
        json.dump({"tokens": tokens, "eos_id": args.eos_id}, f, ensure_ascii=False,
                  sort_keys=True, indent=0)
        f.write("\n")
    print(f"wrote {len(tokens)} tokens to {args.out}")


if __name__ == "__main__":
    main()

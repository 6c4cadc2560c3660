#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Writes the expected clean_text output for each line of an input file.

This is a one-off reference written against the cleaning rules, not against
the C++ code: ASCII lowercase, drop URL runs (letter-initial scheme followed
by "://", or "www." not preceded by a letter or digit, through the next
whitespace), keep only [a-z0-9$] and whitespace, drop '$', collapse
whitespace.

usage: gen_clean_golden.py INPUT OUTPUT
"""
import re
import sys

URL = re.compile(rb"[a-z][a-z0-9+.\-]*://[^ \t\n\r\f\v]*|(?<![a-z0-9])www\.[^ \t\n\r\f\v]*")
DROP = re.compile(rb"[^a-z0-9$ \t\n\r\f\v]")
SPACE = re.compile(rb"[ \t\n\r\f\v]+")


def clean(raw: bytes) -> bytes:
    text = raw.lower()
    text = URL.sub(b" ", text)
    text = DROP.sub(b"", text)
    text = text.replace(b"$", b"")
    return SPACE.sub(b" ", text).strip(b" \t\n\r\f\v")


def main() -> None:
    src, dst = sys.argv[1], sys.argv[2]
    with open(src, "rb") as f:
        lines = f.read().split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    with open(dst, "wb") as f:
        for line in lines:
            f.write(clean(line) + b"\n")


if __name__ == "__main__":
    main()

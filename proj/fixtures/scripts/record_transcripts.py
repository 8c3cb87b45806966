#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Records the committed transcripts from the scripted responses.

usage: record_transcripts.py path/to/claimcheck

Run from the repository root after author_scripts.py. Each claim in
fixtures/claims/claims.json is verified in record mode against its script,
and the bench cases are run in record mode against their per-case scripts.
"""
import json
import os
import shutil
import subprocess
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


def main():
    binary = os.path.abspath(sys.argv[1])
    os.chdir(ROOT)
    with open("fixtures/claims/claims.json") as f:
        claims = json.load(f)
    scratch = tempfile.mkdtemp()
    try:
        for claim in claims:
            if os.path.exists(claim["transcript"]):
                os.remove(claim["transcript"])
            cmd = [binary, "verify", "--config", claim["config"], "--claim", claim["claim"], "--mode", "record",
                   "--script", claim["script"], "--transcript", claim["transcript"],
                   "--out", os.path.join(scratch, claim["name"])]
            if claim["context"]:
                cmd += ["--context", claim["context"]]
            subprocess.run(cmd, check=True)

        transcripts = "fixtures/bench/transcripts"
        shutil.rmtree(transcripts, ignore_errors=True)
        os.makedirs(transcripts)
        subprocess.run([binary, "bench", "--config", "fixtures/bench/bench.yaml", "--cases",
                        "fixtures/bench/cases.jsonl", "--mode", "record", "--scripts", "fixtures/bench/scripts",
                        "--transcripts", transcripts, "--out", os.path.join(scratch, "bench")], check=True)
    finally:
        shutil.rmtree(scratch)


if __name__ == "__main__":
    main()

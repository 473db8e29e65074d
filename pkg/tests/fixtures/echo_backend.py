"""Minimal protocol fixture: a backend that replays a JSON table from argv,
falling back to echoing the buggy segment. Used by the generator tests."""

import json
import sys


def buggy_segment(tokens):
    try:
        start = tokens.index("<BOL>") + 1
        end = tokens.index("<EOL>")
    except ValueError:
        return None
    return " ".join(tokens[start:end])


def main() -> int:
    table = json.loads(sys.argv[1]) if len(sys.argv) > 1 else {}
    mode = sys.argv[2] if len(sys.argv) > 2 else "ok"
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        rid = request.get("id")
        k = int(request.get("k", 10))
        if mode == "hang":
            import time

            time.sleep(3600)
        if mode == "garbage":
            print("not json at all")
            sys.stdout.flush()
            continue
        if mode == "bad-ranks":
            response = {"id": rid, "candidates": [{"rank": 5, "text": "x ;", "score": 1.0}]}
        else:
            texts = table.get(rid)
            if texts is None:
                fallback = buggy_segment(request.get("input_tokens", []))
                texts = [fallback] if fallback else []
            candidates = [
                {"rank": i, "text": t, "score": round(1.0 / i, 6)}
                for i, t in enumerate(texts[:k], start=1)
            ]
            response = {"id": rid, "candidates": candidates}
        print(json.dumps(response))
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())

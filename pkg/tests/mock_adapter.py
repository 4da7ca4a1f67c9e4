"""Stand-in external system for the subprocess bridge tests.

Usage: ``mock_adapter.py MODE [LOG]``. Every request's ``op`` is appended
to LOG. Query behaviour depends on MODE:

ok          fixed two-bin answer
garbage     a line that is not JSON
crash       exit with status 3
slow        sleep two seconds, then answer
error       an error reply
badid       first query: a reply whose id is a list, then the real answer
interleave  hold the first query; on the second, write garbage and answer the second
"""

import json
import sys
import time


def answer(message: dict) -> dict:
    key = [0 if "method" in b else "AA" for b in message["viz"]["binning"]]
    other = [1 if "method" in b else "DL" for b in message["viz"]["binning"]]
    return {
        "id": message["id"],
        "bins": [
            {"key": key, "estimate": 42.0, "margin": 1.5},
            {"key": other, "estimate": 7.0, "margin": "inf"},
        ],
        "progress": 0.5,
    }


def main() -> int:
    mode = sys.argv[1]
    log = open(sys.argv[2], "a", encoding="utf-8") if len(sys.argv) > 2 else None
    queries = 0
    for line in sys.stdin:
        message = json.loads(line)
        op = message["op"]
        if log:
            log.write(op + "\n")
            log.flush()
        if op == "setup":
            reply = {
                "id": message["id"],
                "capabilities": {"supports_progressive_poll": True, "supports_margins": True},
            }
        elif op == "query":
            queries += 1
            if mode == "garbage":
                print("this is not json", flush=True)
                continue
            if mode == "crash":
                return 3
            if mode == "slow":
                time.sleep(2.0)
            if mode == "interleave" and queries == 1:
                continue
            if mode == "interleave" and queries == 2:
                print("this is not json", flush=True)
            if mode == "badid" and queries == 1:
                print(json.dumps({"id": [message["id"]], "bins": []}), flush=True)
            if mode == "error":
                reply = {"id": message["id"], "error": "table is locked"}
            else:
                reply = answer(message)
        else:
            continue
        print(json.dumps(reply), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Serve the remote-sampler job protocol locally until interrupted.

    python3 scripts/mock_sampler_server.py --port 8765
    LQSVM_SAMPLER_ENDPOINT=http://127.0.0.1:8765 lqsvm cv --set sampler.kind=remote ...
"""

import argparse
import time

from lqsvm.mock_server import MockSamplerServer


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=8765)
    ap.add_argument("--pending-polls", type=int, default=1)
    ap.add_argument("--sweeps", type=int, default=100)
    args = ap.parse_args()
    with MockSamplerServer(args.host, args.port, pending_polls=args.pending_polls, sweeps=args.sweeps) as srv:
        print(f"serving on {srv.url}", flush=True)
        try:
            while True:
                time.sleep(3600)
        except KeyboardInterrupt:
            pass


if __name__ == "__main__":
    main()

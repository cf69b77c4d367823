#!/usr/bin/env python3
"""Smoke test for the ddns_py extension module.

Builds the cdylib with cargo, imports it, then walks the whole surface:
key generation, node setup, registration, in-process resolution, a raw
UDP query against the embedded server, deactivation, and store fsck.

Run from anywhere:  python3 python/smoke_test.py
"""

import json
import shutil
import socket
import struct
import subprocess
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent

A_RECORD = '{"Type":"A","Address":"1.2.3.4"}'
A_RECORD_CID = "QmR3HMw7AAVyQTRP2E9yMhSqt4LRXEakKzXcbc4nPFPZ3X"


def build_module(workdir: Path) -> None:
    subprocess.run(
        ["cargo", "build", "-p", "ddns-py", "--features", "extension-module"],
        cwd=REPO,
        check=True,
    )
    built = REPO / "target" / "debug" / "libddns_py.so"
    shutil.copy2(built, workdir / "ddns_py.so")
    sys.path.insert(0, str(workdir))


def make_query(qid: int, name: str, qtype: int = 1) -> bytes:
    header = struct.pack(">HHHHHH", qid, 0x0100, 1, 0, 0, 0)
    qname = b"".join(
        bytes([len(label)]) + label.encode("ascii") for label in name.split(".")
    )
    return header + qname + b"\x00" + struct.pack(">HH", qtype, 1)


def udp_ask(port: int, name: str) -> bytes:
    with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as sock:
        sock.settimeout(3.0)
        sock.sendto(make_query(0xBEEF, name), ("127.0.0.1", port))
        reply, _ = sock.recvfrom(4096)
    return reply


def main() -> None:
    workdir = Path(tempfile.mkdtemp(prefix="ddns-py-smoke-"))
    build_module(workdir)
    import ddns_py

    assert ddns_py.compute_cid(A_RECORD.encode()) == A_RECORD_CID
    print(f"compute_cid: {A_RECORD_CID}")

    keypair = ddns_py.KeyPair()
    config = workdir / "ddns.json"
    config.write_text(
        json.dumps(
            {
                "data_dir": str(workdir / "data"),
                "upstream": "127.0.0.1:1",
                "genesis_balances": {keypair.address: 10.0},
            }
        )
    )

    node = ddns_py.Node(str(config))
    session = node.session(keypair)
    print(f"node open, registrar {session.address}")

    session.register_tld("xxx")
    session.add_subdomain("xxx", "www")
    cid, txid = session.set_domain_record("xxx", "www", keypair.address, A_RECORD)
    assert cid == A_RECORD_CID, cid
    assert len(txid) == 64
    height = node.advance_block()
    print(f"registered www.xxx.ddns at height {height}, cid {cid}")

    status, answers = node.resolve("www.xxx.ddns", "A")
    assert status == "NOERROR", status
    assert answers[0][3] == "1.2.3.4", answers
    print(f"in-process resolve: {status} {answers}")

    server = node.serve("127.0.0.1:0")
    reply = udp_ask(server.port, "www.xxx.ddns")
    qid, flags, _, ancount, _, _ = struct.unpack(">HHHHHH", reply[:12])
    assert qid == 0xBEEF
    assert flags & 0x000F == 0, f"rcode {flags & 0xF}"
    assert ancount == 1
    assert reply.endswith(socket.inet_aton("1.2.3.4"))
    print(f"udp resolve on {server.address}: {ancount} answer")

    session.disable("www.xxx.ddns")
    node.advance_block()
    status, answers = node.resolve("www.xxx.ddns", "A")
    assert status == "NXDOMAIN" and not answers, (status, answers)
    print("disabled name is NXDOMAIN")

    stats = json.loads(node.stats_json())
    assert stats["height"] == node.height
    assert stats["counters"]["queries"] >= 3
    checked, mismatched, unreadable = node.fsck()
    assert checked >= 1 and not mismatched and not unreadable
    print(f"stats/fsck ok: height {stats['height']}, {checked} object(s) verified")

    server.shutdown()
    print("smoke test passed")


if __name__ == "__main__":
    main()

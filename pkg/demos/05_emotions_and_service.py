"""VAD bits to emotions to avatars, and the streaming service.

The eight (valence, arousal, dominance) bit triples map bijectively to
eight emotions with all-low anchored at neutral; each emotion resolves
to an avatar identifier. The NDJSON service exposes the whole chain
over a socket: one request line in, one response line out, in order.
"""

import json
import socket

import numpy as np

from evoke.emotions import ALL_TRIPLES, AvatarManifest, EmotionTable, classify_window
from evoke.models import build_student
from evoke.server import InferenceServer
from evoke.tensor import Prng

table = EmotionTable.default()
manifest = AvatarManifest.default(table)

print("default emotion table (v, a, d) -> emotion -> avatar:")
for triple in ALL_TRIPLES:
    emotion = table.emotion(triple)
    print(f"  {triple} -> {emotion:9s} -> {manifest.avatar(emotion)}")

# --- classify one feature window with an untrained student (for shape only)
model = build_student(prng=Prng(0)).freeze()
window = np.random.default_rng(1).normal(size=(4, 9, 9)).astype(np.float32)
record = classify_window(model, window, table, manifest)
print("\nclassify_window record:")
print(json.dumps(record.to_dict(), indent=2))

# --- the same chain over the wire
server = InferenceServer(model, table, manifest, host="127.0.0.1", port=0).start()
host, port = server.address
print(f"\nservice listening on {host}:{port}; sending three requests and one bad line")
sock = socket.create_connection((host, port))
for i in range(3):
    sock.sendall(json.dumps({"id": f"demo-{i}", "window": window.tolist()}).encode() + b"\n")
sock.sendall(b"this is not json\n")

received = 0
buf = b""
while received < 4:
    buf += sock.recv(65536)
    while b"\n" in buf:
        line, buf = buf.split(b"\n", 1)
        obj = json.loads(line)
        received += 1
        if "error" in obj:
            print(f"  error response: {obj}")
        else:
            print(f"  {obj['id']}: {obj['emotion']} / {obj['avatar']} ({obj['latency_ms']:.2f} ms)")
sock.close()
server.stop()
print("connection survived the malformed line; service stopped cleanly")

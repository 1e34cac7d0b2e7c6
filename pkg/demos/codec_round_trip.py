"""
Random linear coding round trip
===============================

A message is cut into fixed-size segments, grouped into generations and
sent as random combinations over GF(256).  Any ``k`` innovative packets
decode a generation of ``k`` segments.
"""

import numpy as np

from mptcpnc import coding

rng = np.random.default_rng(7)
message = b"multipath coded transport " * 200

generations = coding.segment(message, segment_size=256, block=8)
print(len(message), "bytes ->", len(generations), "generations of up to 8 segments")

decoded = []
for gid, gen in enumerate(generations):
    enc = coding.Encoder(gen, gid)
    dec = coding.new_decoder(gid, len(gen))
    sent = 0
    while coding.dof_needed(dec):
        # Drop a third of the packets on the way.
        pkt = enc.emit(rng)
        sent += 1
        if rng.random() < 1 / 3:
            continue
        coding.decoder_receive(dec, coding.CodedPacket.from_bytes(pkt.to_bytes()))
    decoded.append(coding.decode_all(dec))
    print(f"generation {gid}: {sent} packets sent for {len(gen)} segments")

assert coding.reassemble(decoded, len(message)) == message
print("message recovered")

"""Canonical payload encoding against the independent reference codec."""

import random
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from swapgate.encoding import (
    Direction,
    PayloadEntry,
    decode_payload,
    encode_payload,
    payload_hash,
)
from swapgate.errors import MalformedPayload

from reference_codec import GOLDEN_PAYLOADS, ref_encode_payload, ref_payload_hash

GOLDEN_DIR = Path(__file__).parent / "golden"


def to_entries(raw):
    return [PayloadEntry(Direction(d), sid, sym, oc, recv, amt)
            for d, sid, sym, oc, recv, amt in raw]


def test_golden_files_match_encoder():
    """The three checked-in vectors are reproduced bit-exactly."""
    for i, raw in enumerate(GOLDEN_PAYLOADS):
        expected_hex = (GOLDEN_DIR / f"payload_{i}.hex").read_text().strip()
        expected_hash = (GOLDEN_DIR / f"payload_{i}.sha256").read_text().strip()
        encoded = encode_payload(to_entries(raw))
        assert encoded.hex() == expected_hex
        assert payload_hash(to_entries(raw)).hex() == expected_hash


def test_golden_files_match_reference():
    """Guards the frozen files against accidental regeneration drift."""
    for i, raw in enumerate(GOLDEN_PAYLOADS):
        expected_hex = (GOLDEN_DIR / f"payload_{i}.hex").read_text().strip()
        assert ref_encode_payload(raw).hex() == expected_hex
        assert ref_payload_hash(raw).hex() == \
            (GOLDEN_DIR / f"payload_{i}.sha256").read_text().strip()


def random_entry(rng: random.Random) -> PayloadEntry:
    return PayloadEntry(
        direction=Direction(rng.randint(0, 1)),
        swap_id=rng.randbytes(32),
        symbol="".join(rng.choice("ABCDEFGHXYZ") for _ in range(rng.randint(1, 12))),
        origin_chain=rng.randint(0, 255),
        receiver=rng.randbytes(20),
        amount=rng.randint(0, 2**64 - 1),
    )


def test_roundtrip_and_injectivity_1000():
    """encode -> decode is lossless and distinct payloads never collide."""
    rng = random.Random(42)
    seen: dict[bytes, tuple] = {}
    for _ in range(1000):
        entries = [random_entry(rng) for _ in range(rng.randint(1, 5))]
        raw = encode_payload(entries)
        assert decode_payload(raw) == entries
        key = tuple(entries)
        if raw in seen:
            assert seen[raw] == key
        seen[raw] = key
    assert len(seen) == 1000


def test_reference_agreement_randomized():
    rng = random.Random(7)
    for _ in range(200):
        entries = [random_entry(rng) for _ in range(rng.randint(1, 4))]
        raw_tuples = [(int(e.direction), e.swap_id, e.symbol, e.origin_chain,
                       e.receiver, e.amount) for e in entries]
        assert encode_payload(entries) == ref_encode_payload(raw_tuples)


def test_empty_payload_rejected():
    with pytest.raises(MalformedPayload):
        encode_payload([])
    with pytest.raises(MalformedPayload):
        decode_payload(bytes.fromhex("0000"))


def test_trailing_bytes_rejected():
    raw = encode_payload(to_entries(GOLDEN_PAYLOADS[0]))
    with pytest.raises(MalformedPayload):
        decode_payload(raw + b"\x00")


def test_truncation_rejected():
    raw = encode_payload(to_entries(GOLDEN_PAYLOADS[1]))
    for cut in (1, 10, len(raw) - 1):
        with pytest.raises(MalformedPayload):
            decode_payload(raw[:cut])


def test_bad_direction_byte_rejected():
    raw = bytearray(encode_payload(to_entries(GOLDEN_PAYLOADS[0])))
    raw[2] = 7  # first entry's direction byte
    with pytest.raises(MalformedPayload):
        decode_payload(bytes(raw))


@given(st.lists(
    st.tuples(
        st.integers(0, 1),
        st.binary(min_size=32, max_size=32),
        st.text(alphabet="ABCXYZsw", min_size=1, max_size=8),
        st.integers(0, 255),
        st.binary(min_size=20, max_size=20),
        st.integers(0, 2**64 - 1),
    ),
    min_size=1, max_size=4,
))
def test_roundtrip_property(raw):
    entries = to_entries(raw)
    assert decode_payload(encode_payload(entries)) == entries


def test_oversized_symbol_rejected():
    entry = PayloadEntry(Direction.ORIGIN_TO_DESTINATION, bytes(32), "A" * 256,
                         0, bytes(20), 1)
    with pytest.raises(MalformedPayload):
        encode_payload([entry])

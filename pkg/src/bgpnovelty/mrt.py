"""Streaming parser for MRT route-collector dumps (BGP message subset).

Walks a concatenation of MRT records (big-endian common header: 4-octet
timestamp, 2-octet type, 2-octet subtype, 4-octet length) and emits one
``UpdateRecord`` per BGP UPDATE message found in BGP4MP (type 16) and
BGP4MP_ET (type 17) records of the MESSAGE subtypes (1 and 4). Everything
else a collector interleaves — table dumps, state changes, other protocols —
is skipped silently.

Counts are prefix counts, not message counts: ``announced`` is the number of
entries in the classic NLRI field, ``withdrawn`` the number of entries in the
Withdrawn Routes field. Multiprotocol prefixes (MP_REACH_NLRI /
MP_UNREACH_NLRI) ride inside path attributes and are not decoded; an UPDATE
carrying only attributes yields a {0, 0} record.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

MRT_HEADER_LEN = 12

MRT_TYPE_BGP4MP = 16
MRT_TYPE_BGP4MP_ET = 17

# Subtypes carrying a raw BGP message (16-bit and 32-bit AS header variants).
BGP4MP_MESSAGE = 1
BGP4MP_MESSAGE_AS4 = 4

AFI_IPV4 = 1
AFI_IPV6 = 2

BGP_HEADER_LEN = 19  # 16-octet marker + 2-octet length + 1-octet type
BGP_TYPE_UPDATE = 2


@dataclass(frozen=True)
class UpdateRecord:
    """Per-message announce/withdraw prefix counts at a collector timestamp."""

    timestamp_s: int
    announced: int
    withdrawn: int


class MrtParseError(ValueError):
    """Parse failure; ``offset`` is the byte position of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class TruncatedRecord(MrtParseError):
    """Stream ends mid-record, or a declared length overruns the buffer."""


class MalformedPrefix(MrtParseError):
    """Prefix length above 32 bits, or prefix bytes overrun their field."""


def parse_mrt_stream(data: bytes) -> list[UpdateRecord]:
    """Parse a byte stream of MRT records into UPDATE count records.

    Pure function of the input bytes: the same stream always yields the
    same record sequence, and parsing a concatenation of two streams equals
    concatenating the two parses.

    Raises TruncatedRecord / MalformedPrefix with the byte offset of the
    fault; both abort the parse.
    """
    records: list[UpdateRecord] = []
    n = len(data)
    offset = 0
    while offset < n:
        if n - offset < MRT_HEADER_LEN:
            raise TruncatedRecord("stream ends inside an MRT header", offset)
        timestamp, mrt_type, subtype, length = struct.unpack_from(">IHHI", data, offset)
        body_start = offset + MRT_HEADER_LEN
        if n - body_start < length:
            raise TruncatedRecord("declared record length overruns the stream", offset)
        if (
            mrt_type in (MRT_TYPE_BGP4MP, MRT_TYPE_BGP4MP_ET)
            and subtype in (BGP4MP_MESSAGE, BGP4MP_MESSAGE_AS4)
        ):
            record = _parse_bgp4mp_message(
                data,
                body_start,
                length,
                timestamp,
                extended_time=(mrt_type == MRT_TYPE_BGP4MP_ET),
                as4=(subtype == BGP4MP_MESSAGE_AS4),
            )
            if record is not None:
                records.append(record)
        offset = body_start + length
    return records


def _parse_bgp4mp_message(
    data: bytes,
    start: int,
    length: int,
    timestamp: int,
    extended_time: bool,
    as4: bool,
) -> UpdateRecord | None:
    """Parse one BGP4MP(_ET) MESSAGE record body; None when not an UPDATE."""
    offset = start
    end = start + length
    if extended_time:
        # Microsecond extension: bucketing is per-minute, so truncate to
        # whole seconds by ignoring it.
        if end - offset < 4:
            raise TruncatedRecord("BGP4MP_ET microsecond field truncated", offset)
        offset += 4

    as_size = 4 if as4 else 2
    fixed = 2 * as_size + 2 + 2  # peer AS, local AS, interface index, AFI
    if end - offset < fixed:
        raise TruncatedRecord("BGP4MP message header truncated", offset)
    (afi,) = struct.unpack_from(">H", data, offset + 2 * as_size + 2)
    offset += fixed

    if afi == AFI_IPV4:
        addr_size = 4
    elif afi == AFI_IPV6:
        addr_size = 16
    else:
        # Unknown address family: the BGP message cannot be located, but the
        # record length still tells us where the next record starts.
        return None
    if end - offset < 2 * addr_size:
        raise TruncatedRecord("BGP4MP peer addresses truncated", offset)
    offset += 2 * addr_size

    if end - offset < BGP_HEADER_LEN:
        raise TruncatedRecord("BGP message header truncated", offset)
    (msg_len,) = struct.unpack_from(">H", data, offset + 16)
    msg_type = data[offset + 18]
    if msg_len < BGP_HEADER_LEN:
        raise TruncatedRecord("BGP message length below header size", offset)
    if offset + msg_len > end:
        raise TruncatedRecord("BGP message overruns its MRT record", offset)
    if msg_type != BGP_TYPE_UPDATE:
        return None
    return _parse_update_body(data, offset + BGP_HEADER_LEN, msg_len - BGP_HEADER_LEN, timestamp)


def _parse_update_body(data: bytes, start: int, length: int, timestamp: int) -> UpdateRecord:
    offset = start
    end = start + length
    if end - offset < 2:
        raise TruncatedRecord("withdrawn-routes length field truncated", offset)
    (withdrawn_len,) = struct.unpack_from(">H", data, offset)
    offset += 2
    if offset + withdrawn_len > end:
        raise TruncatedRecord("withdrawn-routes field overruns the UPDATE", offset)
    withdrawn = _count_prefixes(data, offset, withdrawn_len)
    offset += withdrawn_len

    if end - offset < 2:
        raise TruncatedRecord("path-attribute length field truncated", offset)
    (attr_len,) = struct.unpack_from(">H", data, offset)
    offset += 2
    if offset + attr_len > end:
        raise TruncatedRecord("path attributes overrun the UPDATE", offset)
    offset += attr_len  # attribute semantics are out of scope

    announced = _count_prefixes(data, offset, end - offset)
    return UpdateRecord(timestamp_s=timestamp, announced=announced, withdrawn=withdrawn)


def _count_prefixes(data: bytes, start: int, length: int) -> int:
    """Count (length-octet, ceil(length/8) octets) prefix entries in a field."""
    offset = start
    end = start + length
    count = 0
    while offset < end:
        prefix_bits = data[offset]
        if prefix_bits > 32:
            raise MalformedPrefix(f"prefix length {prefix_bits} exceeds 32 bits", offset)
        prefix_bytes = (prefix_bits + 7) // 8
        if offset + 1 + prefix_bytes > end:
            raise MalformedPrefix("prefix bytes overrun the field", offset)
        offset += 1 + prefix_bytes
        count += 1
    return count

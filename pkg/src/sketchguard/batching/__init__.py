"""Batching: per-cycle change representations, share encoding and cost model."""

from .codec import Decoded, FullShareMemory, OpCounts, ShareCodec
from .config import INCREMENTAL_KINDS, BatchConfig, FieldWidths, RepKind, bits_for
from .cost import (
    Cost,
    CostParams,
    cnt_buff_beats_item_buff,
    cost_model,
    full_beats_cnt_buff,
    full_share_bits,
    item_buff_beats_full,
)
from .framework import SmartCMS
from .representations import (
    BatchRepresentation,
    CapacityExceededError,
    CntBuff,
    CntDiff,
    CntHash,
    FlwHash,
    ItemBuff,
    make_representation,
)
from .wire import (
    HEADER,
    WIRE_VERSION,
    MalformedShareError,
    Policy,
    RepTag,
    Share,
    VersionMismatchError,
    WireError,
)

__all__ = [
    "HEADER",
    "INCREMENTAL_KINDS",
    "WIRE_VERSION",
    "BatchConfig",
    "BatchRepresentation",
    "CapacityExceededError",
    "CntBuff",
    "CntDiff",
    "CntHash",
    "Cost",
    "CostParams",
    "Decoded",
    "FieldWidths",
    "FlwHash",
    "FullShareMemory",
    "ItemBuff",
    "MalformedShareError",
    "OpCounts",
    "Policy",
    "RepKind",
    "RepTag",
    "Share",
    "ShareCodec",
    "SmartCMS",
    "VersionMismatchError",
    "WireError",
    "bits_for",
    "cnt_buff_beats_item_buff",
    "cost_model",
    "full_beats_cnt_buff",
    "full_share_bits",
    "item_buff_beats_full",
    "make_representation",
]

"""Python surface of the mobile generative-service provisioning simulator."""

from aigc_edge_sim._core import (
    CLOSED_FORM_BER_NOTE,
    ChannelParams,
    allocate_power,
    ber_closed_form,
    ber_numeric,
    cost,
    count_optimized_prompts,
    decode_action,
    default_catalog_json,
    default_config_json,
    expected_ber_shadowed,
    make_schedule,
    qoe,
    run_experiment,
    service_rounds,
    user_side_score,
)

__all__ = [
    "CLOSED_FORM_BER_NOTE",
    "ChannelParams",
    "allocate_power",
    "ber_closed_form",
    "ber_numeric",
    "cost",
    "count_optimized_prompts",
    "decode_action",
    "default_catalog_json",
    "default_config_json",
    "expected_ber_shadowed",
    "make_schedule",
    "qoe",
    "run_experiment",
    "service_rounds",
    "user_side_score",
]

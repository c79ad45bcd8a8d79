import math
import re

IDENTIFIER_PATTERN = r'^[A-Za-z_][A-Za-z0-9_]*$'


def validate_identifier(name: str) -> dict:
    if not name or not isinstance(name, str):
        return {
            'is_valid': False,
            'error': "Identifier must be a non-empty string"
        }

    if re.match(IDENTIFIER_PATTERN, name):
        return {
            'is_valid': True,
            'data': name
        }
    return {
        'is_valid': False,
        'error': f"Invalid identifier {name!r}: must match [A-Za-z_][A-Za-z0-9_]*"
    }


def validate_finite(value) -> dict:
    try:
        number = float(value)
    except (TypeError, ValueError):
        return {
            'is_valid': False,
            'error': f"Value {value!r} is not a number"
        }

    if not math.isfinite(number):
        return {
            'is_valid': False,
            'error': f"Value {value!r} is not finite"
        }
    return {
        'is_valid': True,
        'data': number
    }


def validate_assignment(text: str) -> dict:
    """Validate a NAME=VALUE pair as used by --set and --seed."""
    if not text or '=' not in text:
        return {
            'is_valid': False,
            'error': f"Expected NAME=VALUE, got {text!r}"
        }

    name, _, raw_value = text.partition('=')
    name = name.strip()
    name_validation = validate_identifier(name)
    if not name_validation['is_valid']:
        return name_validation

    value_validation = validate_finite(raw_value.strip())
    if not value_validation['is_valid']:
        return value_validation

    return {
        'is_valid': True,
        'data': (name, value_validation['data'])
    }


def validate_range_spec(text: str) -> dict:
    """Validate VAR=LO:HI[,VAR=LO:HI...] into {VAR: (lo, hi)}."""
    if not text or not isinstance(text, str):
        return {
            'is_valid': False,
            'error': "Range spec must be a non-empty string"
        }

    ranges = {}
    for part in text.split(','):
        part = part.strip()
        if not part:
            continue
        name, _, bounds = part.partition('=')
        name_validation = validate_identifier(name.strip())
        if not name_validation['is_valid']:
            return name_validation

        lo_text, sep, hi_text = bounds.partition(':')
        if not sep:
            return {
                'is_valid': False,
                'error': f"Expected VAR=LO:HI, got {part!r}"
            }
        lo = validate_finite(lo_text.strip())
        hi = validate_finite(hi_text.strip())
        for bound in (lo, hi):
            if not bound['is_valid']:
                return bound
        if lo['data'] > hi['data']:
            return {
                'is_valid': False,
                'error': f"Empty range for {name.strip()}: {lo['data']} > {hi['data']}"
            }
        ranges[name.strip()] = (lo['data'], hi['data'])

    return {
        'is_valid': True,
        'data': ranges
    }


def validate_order_list(text: str, order_cap: int) -> dict:
    """Validate '0..5' or '0,1,2' into a sorted list of distinct orders."""
    if not text or not isinstance(text, str):
        return {
            'is_valid': False,
            'error': "Orders must be a non-empty string"
        }

    try:
        if '..' in text:
            lo_text, _, hi_text = text.partition('..')
            orders = list(range(int(lo_text), int(hi_text) + 1))
        else:
            orders = [int(part) for part in text.split(',') if part.strip()]
    except ValueError:
        return {
            'is_valid': False,
            'error': f"Orders must be 'A..B' or a comma separated list, got {text!r}"
        }

    if not orders:
        return {
            'is_valid': False,
            'error': f"No orders in {text!r}"
        }
    if min(orders) < 0 or max(orders) > order_cap:
        return {
            'is_valid': False,
            'error': f"Orders must lie in 0..{order_cap}"
        }

    return {
        'is_valid': True,
        'data': sorted(set(orders))
    }

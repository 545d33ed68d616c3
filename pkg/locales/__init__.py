import json
import os
import logging
from typing import Dict, Any, Optional

logger = logging.getLogger(__name__)

AVAILABLE = ["en", "ru"]

# Global state for current locale and locales data
_current_locale = None
# Dictionary to store loaded locale data: {locale_code: {key: value}}
_locales_data: Dict[str, Dict[str, Any]] = {}


def load_locales():
    """Load all locale files from locales directory"""
    global _locales_data

    locales_dir = os.path.dirname(__file__)

    for locale_code in AVAILABLE:
        file_path = os.path.join(locales_dir, f"{locale_code}.json")
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                _locales_data[locale_code] = json.load(f)
                logger.debug(f"Loaded locale: {locale_code}")
        except FileNotFoundError:
            logger.error(f"Locale file not found: {file_path}")
        except json.JSONDecodeError as e:
            logger.error(f"Error parsing {file_path}: {e}")


def set_locale(locale_code: str) -> bool:
    """
    Set global locale for all messages

    Args:
        locale_code: Language code (en, ru)

    Returns:
        True if locale set successfully, False otherwise
    """
    global _current_locale

    if locale_code not in _locales_data:
        logger.warning(f"Locale '{locale_code}' not found. Available: {list(_locales_data.keys())}")
        return False

    _current_locale = locale_code
    return True


def get_text(key: str, locale: Optional[str] = None, **kwargs) -> str:
    """
    Get translated text

    Args:
        key: Dot-separated key (e.g. "cli.done")
        locale: Explicit locale code, the global locale otherwise
        **kwargs: Format parameters

    Returns:
        Formatted text; the key itself when it is missing
    """
    current_locale = locale or _current_locale
    try:
        value = _locales_data[current_locale]
        for k in key.split("."):
            value = value[k]
    except (KeyError, TypeError) as e:
        logger.error(f"Translation key not found: {key} (locale: {current_locale}, error: {e})")
        return key

    if not kwargs:
        return value
    try:
        return value.format(**kwargs)
    except (KeyError, ValueError) as format_error:
        logger.warning(f"Format error in key '{key}': {format_error}")
        return value


# Alias for gettext-style usage
_ = get_text


# Initialize locales on module import
load_locales()
set_locale(os.getenv("DEFAULT_LOCALE", "en"))

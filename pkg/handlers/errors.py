import logging

from locales import _
from services.errors import BlowUpError, ConfigError, CriterionViolation, LabError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_BLOWUP = 2
EXIT_CRITERION = 3


def error_handler(error: BaseException, notify=print) -> int:
    """Global error handler: report the failure and return the exit code"""
    try:
        raise error
    except ConfigError as e:
        logger.error(f"Config error: {e}")
        notify(_("errors.config", error=e))
        return EXIT_INVALID
    except BlowUpError as e:
        logger.error(f"Blow-up at t={e.time:g}: amplitude {e.amplitude:.3e}")
        notify(_("errors.blowup", time=f"{e.time:g}", amplitude=f"{e.amplitude:.3e}"))
        return EXIT_BLOWUP
    except CriterionViolation as e:
        logger.warning(f"Criterion violation: {e}")
        notify(_("errors.criterion", flagged=", ".join(str(f) for f in e.flagged) or str(e)))
        return EXIT_CRITERION
    except (LabError, ValueError) as e:
        logger.error(f"Validation error: {e}", exc_info=True)
        notify(_("errors.validation", error=e))
        return EXIT_INVALID
    except Exception as e:
        logger.error(f"Unexpected error: {e}", exc_info=True)
        notify(_("errors.unexpected", error=f"{type(e).__name__}: {e}"))
        return EXIT_INVALID

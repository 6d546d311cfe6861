import logging
import sys

from app.core.config.settings import refresh_settings

logger = logging.getLogger("avalanche_startup")

if __name__ == "__main__":
    try:
        # Ensure we have fresh settings
        refresh_settings()

        from app.main import main

        sys.exit(main())
    except SystemExit:
        raise
    except Exception as e:
        logger.error(f"Failed to start: {str(e)}", exc_info=True)
        sys.exit(1)

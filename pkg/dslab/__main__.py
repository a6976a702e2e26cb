"""Allow running as: python -m dslab"""

import sys

from .main import main

sys.exit(main())

import sys

from ciscurv.main import main

sys.exit(main())

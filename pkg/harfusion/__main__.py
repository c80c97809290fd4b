import sys

from harfusion.main import main


sys.exit(main())

import sys
from pathlib import Path

# Make helpers importable regardless of how pytest resolves rootdir.
_HERE = str(Path(__file__).resolve().parent)
if _HERE not in sys.path:
    sys.path.insert(0, _HERE)

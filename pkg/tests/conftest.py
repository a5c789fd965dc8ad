import sys
from pathlib import Path

# make sibling helper modules (svm_oracle) importable from any test file
sys.path.insert(0, str(Path(__file__).parent))

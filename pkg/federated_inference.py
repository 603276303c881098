#!/usr/bin/env python3
"""
Robust federated inference toolkit - command-line entry point.

Usage examples:
    python federated_inference.py generate --seed 7 --out runs/data
    python federated_inference.py train --data runs/data/dataset.txt --f 4 --out runs/model
    python federated_inference.py evaluate --data runs/data/dataset.txt \
        --model runs/model/model.json --f 0,2,4 --out runs/eval
"""

import sys
from pathlib import Path

# Add the project root to the path so ``src`` resolves without installation
sys.path.insert(0, str(Path(__file__).parent))

from dotenv import load_dotenv

from src.cli import main

# Load environment variables (RFI_* settings)
load_dotenv()


if __name__ == "__main__":
    sys.exit(main())

import shutil
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))


def after_scenario(context, scenario):
    out_dir = getattr(context, "out_dir", None)
    if out_dir is not None:
        shutil.rmtree(out_dir, ignore_errors=True)
    repository = getattr(context, "repository", None)
    if repository is not None:
        repository.close()

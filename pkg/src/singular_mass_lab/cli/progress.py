"""CLI progress reporting."""

import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

logger = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_VIOLATED = "VIOLATED"
STATUS_FAILED = "FAILED"


@dataclass
class CampaignOutcome:
    """How one campaign ended: ok, an invariant VIOLATED, or FAILED (aborted)."""

    name: str
    status: str
    summary: str
    files: List[Path] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def succeeded(self) -> bool:
        return self.status == STATUS_OK


class CLIProgressReporter:
    """One stdout line per finished campaign, a closing summary on stderr."""

    def __init__(self, quiet: bool = False):
        self.quiet = quiet
        self.outcomes: List[CampaignOutcome] = []
        self._started: Dict[str, float] = {}
        self.start_time: Optional[float] = None
        logger.debug(f"CLIProgressReporter initialized with quiet={quiet}")

    def on_campaign_started(self, name: str):
        now = time.time()
        if self.start_time is None:
            self.start_time = now
        self._started[name] = now
        logger.info(f"Campaign {name} started")

    def on_campaign_finished(self, outcome: CampaignOutcome):
        started = self._started.pop(outcome.name, None)
        if started is not None:
            outcome.seconds = time.time() - started
        self.outcomes.append(outcome)
        # the summary line is the campaign's result, so it is printed even when quiet
        print(f"{outcome.name}: {outcome.status} - {outcome.summary}", file=sys.stdout, flush=True)
        logger.debug(f"Campaign {outcome.name} took {outcome.seconds:.2f}s, wrote {len(outcome.files)} files")

    def print_summary(self, output_dir: Path):
        """Print final summary statistics."""
        if self.quiet:
            return
        failed = [o.name for o in self.outcomes if not o.succeeded]
        written = sum(len(o.files) for o in self.outcomes)
        print(f"Ran {len(self.outcomes)} campaign(s), {written} file(s) in {output_dir}", file=sys.stderr)
        if failed:
            print(f"Not ok: {', '.join(failed)}", file=sys.stderr)
        if self.start_time:
            print(f"Total time: {time.time() - self.start_time:.2f} seconds", file=sys.stderr)

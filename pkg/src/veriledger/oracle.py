"""Off-chain/on-chain bridge: turns pending analysis requests into commits.

The oracle runs synchronously between blocks on a read-only state
snapshot. It picks up to ``batch_limit`` pending requests in request-id
order, selects the best eligible algorithm per request, executes that
algorithm's detector against the trusted-content registry, and emits the
commit transactions for the next block, signed by the configured oracle
account with sequential nonces. Processing the same snapshot twice yields
an identical batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import (
    CommitAnalysisResult,
    NetworkState,
    RequestStatus,
    Transaction,
    TxKind,
)
from .detection import run_detector, select_model
from .errors import NoEligibleAlgorithm


@dataclass(frozen=True, slots=True)
class OracleConfig:
    oracle_account: str
    batch_limit: int = 16

    def __post_init__(self) -> None:
        if self.batch_limit < 1:
            raise ValueError("batch_limit must be >= 1")


@dataclass(slots=True)
class OracleBatch:
    """One polling round: commit transactions plus the oracle's log lines.

    Log lines are tab-separated: request_id, algorithm_id, verdict,
    elapsed ticks from submission to the block the commit lands in.
    Requests with no eligible algorithm are logged and left pending.
    """

    transactions: list[Transaction] = field(default_factory=list)
    log_lines: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)


def process_pending(state: NetworkState, config: OracleConfig) -> OracleBatch:
    pending = sorted(
        rid
        for rid, req in state.requests.items()
        if req.status is RequestStatus.PENDING
    )
    batch = OracleBatch()
    commit_height = state.tip_height + 1
    next_nonce = state.nonces.get(config.oracle_account, -1) + 1

    for request_id in pending[: config.batch_limit]:
        request = state.requests[request_id]
        try:
            algorithm_id = select_model(
                request.media_type, state.algorithms.values()
            )
        except NoEligibleAlgorithm:
            batch.skipped.append(request_id)
            batch.log_lines.append(
                f"{request_id}\t-\tNoEligibleAlgorithm\t-"
            )
            continue
        spec = state.detectors[state.algorithms[algorithm_id].detector_kind]
        verdict, confidence, matches = run_detector(
            spec, request, state.contents.values()
        )
        batch.transactions.append(
            Transaction(
                kind=TxKind.COMMIT_ANALYSIS_RESULT,
                sender=config.oracle_account,
                payload=CommitAnalysisResult(
                    request_id=request_id,
                    algorithm_id=algorithm_id,
                    verdict=verdict,
                    confidence=confidence,
                    matched_content=tuple(
                        (m.content_id, m.similarity) for m in matches
                    ),
                ),
                nonce=next_nonce,
            )
        )
        next_nonce += 1
        elapsed = commit_height - request.submitted_at
        batch.log_lines.append(
            f"{request_id}\t{algorithm_id}\t{verdict.value}\t{elapsed}"
        )
    return batch

from veriledger.codec import hash_bytes
from veriledger.core import (
    AlgorithmStatus,
    Embedding,
    MediaType,
    NetworkState,
    ReceiptStatus,
    RequestStatus,
    SubmitAnalysisRequest,
    TxKind,
    transaction_hash,
)
from veriledger.ledger import init_chain, seal_block
from veriledger.oracle import OracleConfig, process_pending
from veriledger.rng import SplitMix64

from test_contracts import make_state, Driver, register_algo, activate_algo

ORACLE = "oracle"


def embedding(rng: SplitMix64) -> Embedding:
    return Embedding(
        values=tuple((1 + rng.randrange(999)) / 1000 for _ in range(256)),
        media_type=MediaType.BYTES,
    )


def pending_state(request_count: int) -> NetworkState:
    driver = Driver(make_state({"alice": 10_000, "bob": 10_000}))
    register_algo(driver)
    activate_algo(driver)
    rng = SplitMix64(100)
    for i in range(request_count):
        receipt, _ = driver.submit(
            TxKind.SUBMIT_ANALYSIS_REQUEST,
            "bob",
            SubmitAnalysisRequest(
                media_type=MediaType.BYTES,
                content_hash=hash_bytes(f"q-{i}".encode()),
                embedding=embedding(rng),
                fee=10,
            ),
        )
        assert receipt.status is ReceiptStatus.ACCEPTED
    driver.state.tip_height = 5
    return driver.state


def test_no_pending_requests_gives_empty_batch():
    state = pending_state(0)
    batch = process_pending(state, OracleConfig(oracle_account=ORACLE))
    assert batch.transactions == []
    assert batch.log_lines == []


def test_batch_limit_takes_smallest_request_ids():
    state = pending_state(20)
    batch = process_pending(state, OracleConfig(oracle_account=ORACLE, batch_limit=16))
    assert len(batch.transactions) == 16
    all_ids = sorted(state.requests)
    picked = [tx.payload.request_id for tx in batch.transactions]
    assert picked == all_ids[:16]


def test_same_snapshot_twice_is_identical():
    state = pending_state(7)
    config = OracleConfig(oracle_account=ORACLE)
    a = process_pending(state, config)
    b = process_pending(state, config)
    assert [transaction_hash(t) for t in a.transactions] == [
        transaction_hash(t) for t in b.transactions
    ]
    assert a.log_lines == b.log_lines


def test_commits_carry_sequential_nonces():
    state = pending_state(5)
    state.nonces[ORACLE] = 9
    batch = process_pending(state, OracleConfig(oracle_account=ORACLE))
    assert [tx.nonce for tx in batch.transactions] == [10, 11, 12, 13, 14]
    assert all(tx.sender == ORACLE for tx in batch.transactions)


def test_no_eligible_algorithm_leaves_request_pending():
    state = pending_state(3)
    for record in state.algorithms.values():
        record.status = AlgorithmStatus.DEPRECATED
    batch = process_pending(state, OracleConfig(oracle_account=ORACLE))
    assert batch.transactions == []
    assert len(batch.skipped) == 3
    assert all("NoEligibleAlgorithm" in line for line in batch.log_lines)
    assert all(
        req.status is RequestStatus.PENDING for req in state.requests.values()
    )


def test_log_lines_have_elapsed_ticks():
    state = pending_state(2)
    batch = process_pending(state, OracleConfig(oracle_account=ORACLE))
    for line in batch.log_lines:
        request_id, algo_id, verdict, elapsed = line.split("\t")
        assert request_id in state.requests
        assert algo_id == "algo-1"
        assert verdict in {"Authentic", "Deepfake", "Unverified"}
        # requests were submitted at height 1, commits land at tip+1 = 6
        assert elapsed == "5"


def test_commits_apply_cleanly_in_next_block():
    state = pending_state(4)
    genesis_balance_state = state.clone()
    genesis_balance_state.tip_height = -1
    _, chained = init_chain(genesis_balance_state)
    batch = process_pending(chained, OracleConfig(oracle_account=ORACLE))
    block, new_state, receipts = seal_block(chained, batch.transactions, timestamp=1)
    assert all(r.status is ReceiptStatus.ACCEPTED for r in receipts)
    completed = [
        r for r in new_state.requests.values() if r.status is RequestStatus.COMPLETED
    ]
    assert len(completed) == 4


def test_batch_partitioning_does_not_change_outcome(golden_config):
    # Any admissible batch split of the same pending set reaches the same
    # Completed set and the same per-class fee totals; only which proposer
    # collects each block's share may move.
    from dataclasses import replace

    from veriledger.sim import ScenarioRunner

    runs = {}
    for limit in (16, 5):
        config = replace(golden_config, oracle_batch_limit=limit)
        runs[limit] = ScenarioRunner(config).run()

    states = {limit: r.chain.final_state for limit, r in runs.items()}
    completed = {
        limit: {
            rid
            for rid, req in s.requests.items()
            if req.status is RequestStatus.COMPLETED
        }
        for limit, s in states.items()
    }
    assert completed[16] == completed[5]
    for field in (
        "fees_to_owners",
        "fees_to_proposers",
        "fees_burned",
        "stake_burned",
        "total_burned",
        "total_minted",
    ):
        assert getattr(states[16], field) == getattr(states[5], field), field

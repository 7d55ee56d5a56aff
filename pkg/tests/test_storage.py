import json
import random
from pathlib import Path

import blockworld.protocol as proto
import blockworld.storage as storage
import blockworld.world as w
from conftest import make_user

A = make_user(0xA)
B = make_user(0xB)


def live_host(tmp_path: Path, world_id="w") -> proto.Sequencer:
    state = w.WorldState(world_id=world_id)
    log = storage.EventLog(tmp_path / world_id)
    log.write_meta(state)
    return proto.Sequencer(state, log)


def drive(seq: proto.Sequencer, rng: random.Random, n_ops: int, users=(A, B)):
    for user in users:
        seq.join(user, 0)
    op = 0
    for i in range(n_ops):
        op += 1
        user = rng.choice(users)
        roll = rng.random()
        if roll < 0.55:
            cmd = proto.AddBlock(
                op_id=op,
                pos=w.CellPos(rng.randrange(10), rng.randrange(6), rng.randrange(10)),
                size=rng.choice(list(w.SizeClass)),
                color=w.Color(rng.randrange(256), rng.randrange(256), rng.randrange(256)),
            )
        elif roll < 0.75 and seq.state.blocks:
            cmd = proto.DeleteBlock(op_id=op, block_id=rng.choice(sorted(seq.state.blocks)))
        elif roll < 0.9:
            cmd = proto.Undo(op_id=op)
        else:
            seq.observe_marker(
                user,
                proto.MarkerObserved("poster-1", [1.0, 0, 0, 0, 1.0, 0, 0, 0, 1.0, 0, 0, 0, 1.0], i),
                now=i,
            )
            continue
        seq.submit(cmd, user, now=i)


class TestPersist:
    def test_thousand_events_one_snapshot(self, tmp_path):
        seq = live_host(tmp_path)
        seq.join(A, 0)
        for i in range(999):
            seq.submit(
                proto.AddBlock(op_id=i, pos=w.CellPos(i % 50, i // 50, 0), size=w.SizeClass.SMALL,
                               color=w.Color(1, 2, 3)),
                A,
                now=i,
            )
        assert seq.state.last_seq == 1_000
        lines = (tmp_path / "w" / "log.ndjson").read_text().splitlines()
        assert len(lines) == 1_000
        assert len(seq.log.snapshot_files()) == 1
        assert seq.log.snapshot_files()[0].name == "snapshot-00001000.json"

    def test_zero_events_no_snapshot(self, tmp_path):
        seq = live_host(tmp_path)
        assert seq.log.snapshot_files() == []
        assert (tmp_path / "w" / "log.ndjson").read_text() == ""


class TestRestore:
    def test_empty_log_gives_empty_world(self, tmp_path):
        live_host(tmp_path).log.close()
        result = storage.restore(tmp_path / "w")
        assert result.state.to_snapshot() == w.WorldState(world_id="w").to_snapshot()

    def test_replay_equals_live_state(self, tmp_path):
        rng = random.Random(60)
        seq = live_host(tmp_path)
        drive(seq, rng, 300)
        seq.log.close()
        result = storage.restore(tmp_path / "w")
        assert result.state.to_snapshot() == seq.state.to_snapshot()
        assert result.state.occupancy == seq.state.occupancy

    def test_replay_through_snapshot_boundary(self, tmp_path):
        rng = random.Random(61)
        seq = live_host(tmp_path)
        drive(seq, rng, 1_400)
        seq.log.close()
        result = storage.restore(tmp_path / "w")
        assert result.state.to_snapshot() == seq.state.to_snapshot()
        # only the records after the latest snapshot were replayed
        assert all(e.seq > 1_000 for e in result.events)

    def test_torn_final_line_dropped_and_truncated(self, tmp_path):
        seq = live_host(tmp_path)
        seq.join(A, 0)
        seq.submit(proto.AddBlock(op_id=1, pos=w.CellPos(0, 0, 0), size=w.SizeClass.SMALL, color=w.Color(1, 2, 3)), A, 1)
        good = seq.state.to_snapshot()
        seq.log.close()
        path = tmp_path / "w" / "log.ndjson"
        with open(path, "a", encoding="utf-8") as fh:
            fh.write('{"seq":3,"time":9,"origin":"x","payl')  # torn mid-record
        result = storage.restore(tmp_path / "w")
        assert result.state.to_snapshot() == good
        assert path.read_text().endswith("}\n")  # file physically truncated

    def test_seq_gap_truncates(self, tmp_path):
        seq = live_host(tmp_path)
        seq.join(A, 0)
        seq.log.close()
        path = tmp_path / "w" / "log.ndjson"
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps({"seq": 5, "time": 1, "origin": A, "payload": {"k": "leave", "user": A}}) + "\n")
        result = storage.restore(tmp_path / "w")
        assert result.state.last_seq == 1
        assert result.truncated_at == 5
        assert len(path.read_text().splitlines()) == 1

    def test_crash_after_append_before_broadcast(self, tmp_path):
        """The appended-but-unacknowledged event survives; the client resend
        hits dedup instead of double-applying."""
        seq = live_host(tmp_path)
        seq.join(A, 0)
        cmd = proto.AddBlock(op_id=77, pos=w.CellPos(1, 0, 1), size=w.SizeClass.MEDIUM, color=w.Color(9, 9, 9))
        acked = seq.submit(cmd, A, now=5)  # appended; pretend the broadcast never left
        seq.log.close()

        result = storage.restore(tmp_path / "w")
        revived = proto.Sequencer(result.state, None)
        revived.dedup_import(result.dedup)
        revived.absorb_replayed(result.events)
        assert result.state.to_snapshot() == seq.state.to_snapshot()
        resent = revived.submit(cmd, A, now=9)
        assert isinstance(resent, proto.EventMsg)
        assert resent.event.seq == acked.event.seq
        assert len(result.state.blocks) == 1

    def test_dedup_survives_snapshot(self, tmp_path):
        # a second user pushes the log past the snapshot cadence; the first
        # user's op stays inside its own 1,024-entry dedup window
        seq = live_host(tmp_path)
        seq.join(A, 0)
        seq.join(B, 0)
        early = proto.AddBlock(op_id=42, pos=w.CellPos(40, 0, 40), size=w.SizeClass.SMALL, color=w.Color(1, 1, 1))
        first = seq.submit(early, A, now=0)
        for i in range(1_100):
            seq.submit(
                proto.AddBlock(op_id=100 + i, pos=w.CellPos(i % 33, 2 + i // 33, 0), size=w.SizeClass.SMALL,
                               color=w.Color(2, 2, 2)),
                B,
                now=i,
            )
        seq.log.close()
        result = storage.restore(tmp_path / "w")
        revived = proto.Sequencer(result.state, None)
        revived.dedup_import(result.dedup)
        revived.absorb_replayed(result.events)
        resent = revived.submit(early, A, now=999)
        assert isinstance(resent, proto.EventMsg) and resent.event.seq == first.event.seq

    def test_read_log_tolerates_torn_tail(self, tmp_path):
        path = tmp_path / "x.ndjson"
        path.write_text('{"seq":1,"time":0,"origin":"a","payload":{"k":"join","user":"a"}}\n{"seq":2,"tim', encoding="utf-8")
        records = storage.read_log(path)
        assert len(records) == 1

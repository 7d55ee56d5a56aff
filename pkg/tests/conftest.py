import random

import pytest

import blockworld.world as w


@pytest.fixture
def state():
    return w.WorldState(world_id="test")


def make_user(n: int) -> str:
    return f"{n:032x}"


def force_insert(state: w.WorldState, pos, size, color=(200, 30, 30), owner="tester") -> w.Block:
    """Test-only: place a block without occupancy checks (overlaps allowed),
    for geometry scenes that do not need a consistent world."""
    block = w.Block(
        id=state.next_block_id,
        pos=w.CellPos(*pos),
        size=size,
        color=w.Color(*color),
        owner=owner,
        seq=state.last_seq + 1,
        created_at=0,
    )
    state.blocks[block.id] = block
    state.next_block_id += 1
    state.last_seq += 1
    return block


def random_scene(rng: random.Random, max_blocks: int = 200) -> w.WorldState:
    scene = w.WorldState(world_id="scene")
    for _ in range(rng.randrange(max_blocks + 1)):
        size = rng.choice(list(w.SizeClass))
        pos = (rng.randrange(-20, 20), rng.randrange(0, 20), rng.randrange(-20, 20))
        force_insert(scene, pos, size)
    return scene

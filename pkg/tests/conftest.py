import pytest

from scenebench.bench.assets import ASSETS_BY_NAME, make_node, table
from scenebench.graph.base import ObjectNode, Predicate, RelationEdge, SceneGraph
from scenebench.graph.extract import extract_relations
from scenebench.graph.geometry import TABLE_AABB, resting_on


def on_table(name: str, node_id: str, xy: tuple[float, float], **kwargs) -> ObjectNode:
    asset = ASSETS_BY_NAME[name]
    return make_node(asset, node_id, resting_on(TABLE_AABB, xy, asset.size), **kwargs)


def stub_graph(*edges: tuple[str, str, str]) -> SceneGraph:
    """Geometry-less graph over the endpoints of ``edges``."""
    ids = sorted({e[0] for e in edges} | {e[2] for e in edges})
    return SceneGraph.build(
        [ObjectNode.stub(i) for i in ids],
        [RelationEdge(s, Predicate(p), o) for s, p, o in edges],
    )


@pytest.fixture
def sorting_scene() -> SceneGraph:
    """An open red box and two loose cubes, one red and one blue."""
    return extract_relations(
        [
            table(),
            on_table("red_box", "box_01", (-0.6, -0.3), opened=True),
            on_table("red_cube", "cube_01", (0.2, -0.3)),
            on_table("blue_cube", "cube_02", (0.5, -0.3)),
        ]
    )


@pytest.fixture
def closed_box_scene() -> SceneGraph:
    """A cube resting on the floor of a closed box."""
    from scenebench.graph.geometry import in_slot

    box = on_table("yellow_box", "box_01", (0.0, 0.0))
    cube = make_node(ASSETS_BY_NAME["red_cube"], "cube_01", in_slot(box.aabb, (0.0, 0.0), (0.05, 0.05, 0.05)))
    return extract_relations([table(), box, cube])

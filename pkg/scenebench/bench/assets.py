"""Asset library the task suites draw objects from.

Sizes are in meters (x, y, z). Anything that is ever stored in a container keeps a
footprint under one slot and a height below the shallowest drawer.
"""

import random
from dataclasses import dataclass
from .._compat import StrEnum

from ..graph.base import Aabb, Articulation, Keypoint, ObjectNode, Pose, UnaryState, Vec3
from ..graph.extract import DEFAULT_EXTRACTION
from ..graph.geometry import TABLE_AABB, TABLE_ID, container_slots, fits_inside, in_slot, resting_on
from ..world.engine import OPEN_MARGIN


class AssetGroup(StrEnum):
    BASIC = "basic"
    ARTICULATED = "articulated"
    PACKAGED = "packaged"
    KITCHENWARE = "kitchenware"
    APPLIANCE = "appliance"


class JointKind(StrEnum):
    NONE = "none"
    LID = "lid"
    DRAWER = "drawer"
    DOOR = "door"


JOINT_RANGES = {
    JointKind.LID: (0.0, 1.57),
    JointKind.DOOR: (0.0, 1.57),
    JointKind.DRAWER: (0.0, 0.3),
}

COLORS = ("red", "yellow", "blue")


@dataclass(frozen=True, kw_only=True)
class AssetSpec:
    name: str
    category: str
    group: AssetGroup
    size: Vec3
    container: bool = False
    joint: JointKind = JointKind.NONE
    switchable: bool = False
    color: str | None = None
    # id prefix; colored cubes and mugs share one stem and differ by attribute
    stem: str | None = None

    @property
    def id_stem(self) -> str:
        return self.stem or self.name

    @property
    def storable(self) -> bool:
        return fits_inside(self.size, DRAWER_SIZE)


DRAWER_SIZE: Vec3 = (0.5, 0.5, 0.2)
BOX_SIZE: Vec3 = (0.5, 0.5, 0.2)
CABINET_TOP: Vec3 = (0.5, 0.5, 0.04)
DRAWER_GAP = 0.04


def _basic() -> list[AssetSpec]:
    boxes = [
        AssetSpec(
            name=f"{color}_box",
            category="box",
            group=AssetGroup.BASIC,
            size=BOX_SIZE,
            container=True,
            joint=JointKind.LID,
            color=color,
        )
        for color in COLORS
    ]
    mugs = [
        AssetSpec(
            name=f"{color}_mug", category="mug", group=AssetGroup.BASIC, size=(0.08, 0.08, 0.1), color=color, stem="mug"
        )
        for color in COLORS
    ]
    cubes = [
        AssetSpec(
            name=f"{color}_cube", category="cube", group=AssetGroup.BASIC, size=(0.05, 0.05, 0.05), color=color, stem="cube"
        )
        for color in COLORS + ("green", "white")
    ]
    return boxes + mugs + cubes


def _group(group: AssetGroup, rows: list[tuple]) -> list[AssetSpec]:
    specs = []
    for row in rows:
        name, size, *rest = row
        options = rest[0] if rest else {}
        specs.append(AssetSpec(name=name, category=options.pop("category", name), group=group, size=size, **options))
    return specs


ASSETS: list[AssetSpec] = _basic() + _group(
    AssetGroup.ARTICULATED,
    [
        ("cabinet", CABINET_TOP, {"joint": JointKind.DRAWER}),
        ("microwave", (0.5, 0.35, 0.3), {"joint": JointKind.DOOR, "switchable": True}),
        ("fridge", (0.6, 0.6, 0.9), {"joint": JointKind.DOOR}),
        ("oven", (0.6, 0.55, 0.5), {"joint": JointKind.DOOR, "switchable": True}),
        ("dishwasher", (0.6, 0.55, 0.6), {"joint": JointKind.DOOR, "switchable": True}),
        ("laptop", (0.33, 0.23, 0.02), {"joint": JointKind.LID, "switchable": True}),
        ("trash_bin", (0.3, 0.3, 0.4), {"category": "bin", "container": True, "joint": JointKind.LID}),
        ("toolbox", (0.4, 0.2, 0.2), {"joint": JointKind.LID}),
        ("wardrobe", (0.8, 0.5, 1.2), {"joint": JointKind.DOOR}),
        ("safe", (0.4, 0.4, 0.4), {"joint": JointKind.DOOR}),
    ],
) + _group(
    AssetGroup.PACKAGED,
    [
        ("milk", (0.07, 0.07, 0.15)),
        ("ketchup", (0.06, 0.04, 0.15)),
        ("mustard", (0.06, 0.04, 0.14)),
        ("popcorn", (0.09, 0.06, 0.08)),
        ("cookies", (0.1, 0.06, 0.1)),
        ("mayo", (0.06, 0.06, 0.12)),
        ("butter", (0.09, 0.05, 0.03)),
        ("cream_cheese", (0.08, 0.05, 0.03)),
        ("chocolate_pudding", (0.07, 0.05, 0.03)),
        ("tomato_sauce", (0.06, 0.06, 0.09)),
        ("orange_juice", (0.07, 0.07, 0.15)),
        ("raisins", (0.07, 0.04, 0.09)),
        ("cereal", (0.1, 0.05, 0.15)),
        ("yogurt", (0.06, 0.06, 0.06)),
    ],
) + _group(
    AssetGroup.KITCHENWARE,
    [
        ("plate", (0.1, 0.1, 0.02)),
        ("white_bowl", (0.16, 0.16, 0.07), {"category": "bowl", "container": True, "color": "white"}),
        ("red_bowl", (0.16, 0.16, 0.07), {"category": "bowl", "container": True, "color": "red"}),
        ("tray", (0.35, 0.25, 0.03)),
        ("cup", (0.07, 0.07, 0.09)),
        ("pitcher", (0.1, 0.1, 0.16)),
        ("pan", (0.3, 0.3, 0.06)),
        ("spatula", (0.1, 0.04, 0.02)),
        ("colander", (0.25, 0.25, 0.1)),
        ("cutting_board", (0.35, 0.25, 0.02)),
        ("kettle", (0.1, 0.1, 0.16), {"switchable": True}),
    ],
) + _group(
    AssetGroup.APPLIANCE,
    [
        ("coffee_machine", (0.25, 0.3, 0.35), {"switchable": True}),
        ("toaster", (0.25, 0.15, 0.18), {"switchable": True}),
        ("blender", (0.15, 0.15, 0.35), {"switchable": True}),
        ("lamp", (0.1, 0.1, 0.16), {"switchable": True}),
        ("book", (0.1, 0.08, 0.03)),
        ("vase", (0.09, 0.09, 0.16)),
        ("speaker", (0.1, 0.1, 0.15), {"switchable": True}),
        ("monitor", (0.5, 0.18, 0.4), {"switchable": True}),
        ("keyboard", (0.45, 0.14, 0.03)),
        ("mouse", (0.06, 0.1, 0.04)),
        ("phone", (0.07, 0.1, 0.01), {"switchable": True}),
        ("clock", (0.1, 0.05, 0.1)),
        ("plant", (0.1, 0.1, 0.16)),
        ("radio", (0.1, 0.06, 0.1), {"switchable": True}),
        ("fan", (0.3, 0.2, 0.4), {"switchable": True}),
        ("printer", (0.45, 0.35, 0.2), {"switchable": True}),
        ("globe", (0.1, 0.1, 0.16)),
    ],
)

ASSETS_BY_NAME = {asset.name: asset for asset in ASSETS}


def asset_library() -> list[AssetSpec]:
    return list(ASSETS)


def _keypoints(aabb: Aabb, container: bool) -> tuple[Keypoint, ...]:
    cx, cy, _ = aabb.center
    points = [Keypoint(name="grasp", position=(cx, cy, aabb.max[2]), role="grasp")]
    if container:
        points.append(Keypoint(name="opening", position=(cx, cy, aabb.max[2]), role="place"))
    return tuple(points)


def make_node(asset: AssetSpec, node_id: str, aabb: Aabb, *, opened: bool = False) -> ObjectNode:
    """Node for ``asset`` occupying ``aabb``; articulated assets start closed unless ``opened``."""
    articulation = None
    states: set[str] = set()
    if asset.joint != JointKind.NONE:
        low, high = JOINT_RANGES[asset.joint]
        threshold = DEFAULT_EXTRACTION.joint_threshold
        value = min(high, threshold + OPEN_MARGIN) if opened else low
        articulation = Articulation(joint_value=value, joint_min=low, joint_max=high, open_threshold=threshold)
        states.add(UnaryState.OPEN if articulation.is_open else UnaryState.CLOSED)
    if asset.switchable:
        states.add(UnaryState.OFF)
    attributes = {"color": asset.color} if asset.color else {}
    return ObjectNode(
        id=node_id,
        category=asset.category,
        pose=Pose(position=aabb.center),
        aabb=aabb,
        keypoints=_keypoints(aabb, asset.container),
        articulation=articulation,
        states=frozenset(states),
        attributes=attributes,
    )


def table() -> ObjectNode:
    return ObjectNode(id=TABLE_ID, category="table", pose=Pose(position=TABLE_AABB.center), aabb=TABLE_AABB)


def cabinet(center_x: float, *, open_drawers: tuple[int, ...] = ()) -> list[ObjectNode]:
    """A three-drawer cabinet against the back edge of the table.

    ``drawer_01`` is the top tier and ``drawer_03`` rests on the table. The cabinet
    node itself is the top slab; drawers pull out toward negative y.
    """
    back = TABLE_AABB.max[1] - 0.1
    y = back - DRAWER_SIZE[1] / 2
    low, high = JOINT_RANGES[JointKind.DRAWER]
    threshold = DEFAULT_EXTRACTION.joint_threshold
    drawers = []
    z = TABLE_AABB.max[2]
    for tier in (3, 2, 1):
        aabb = resting_on(Aabb(min=(0, 0, z), max=(0, 0, z)), (center_x, y), DRAWER_SIZE)
        value = min(high, threshold + OPEN_MARGIN) if tier in open_drawers else low
        articulation = Articulation(joint_value=value, joint_min=low, joint_max=high, open_threshold=threshold)
        placed = aabb.translated(dy=-(value - low))
        drawers.append(
            ObjectNode(
                id=f"drawer_{tier:02d}",
                category="drawer",
                pose=Pose(position=placed.center),
                aabb=placed,
                keypoints=(Keypoint(name="handle", position=(center_x, placed.min[1], placed.center[2]), role="pull"),),
                articulation=articulation,
                states=frozenset({UnaryState.OPEN if articulation.is_open else UnaryState.CLOSED}),
            )
        )
        z = round(aabb.max[2] + DRAWER_GAP, 6)
    top = resting_on(Aabb(min=(0, 0, z), max=(0, 0, z)), (center_x, y), CABINET_TOP)
    body = ObjectNode(
        id="cabinet_01",
        category="cabinet",
        pose=Pose(position=top.center),
        aabb=top,
        children=tuple(sorted(d.id for d in drawers)),
    )
    return [body] + sorted(drawers, key=lambda d: d.id)


def random_scene(rng: random.Random, n: int) -> list[ObjectNode]:
    """``n`` assets on the table, some stacked and some stored, possibly overlapping."""
    nodes: list[ObjectNode] = [table()]
    counts: dict[str, int] = {}
    for _ in range(n - 1):
        asset = rng.choice(ASSETS)
        counts[asset.id_stem] = counts.get(asset.id_stem, 0) + 1
        node_id = f"{asset.id_stem}_{counts[asset.id_stem]:02d}"
        roll = rng.random()
        host = rng.choice(nodes[1:]) if len(nodes) > 1 else None
        if host is not None and roll < 0.2 and host.category in ("box", "bowl", "bin") and asset.storable:
            slot = rng.choice(container_slots(host.aabb) or [host.aabb.center[:2]])
            aabb = in_slot(host.aabb, slot, asset.size)
        elif host is not None and roll < 0.45:
            aabb = resting_on(host.aabb, host.aabb.center[:2], asset.size)
        else:
            x = rng.uniform(TABLE_AABB.min[0] + 0.3, TABLE_AABB.max[0] - 0.3)
            y = rng.uniform(TABLE_AABB.min[1] + 0.3, TABLE_AABB.max[1] - 0.3)
            aabb = resting_on(TABLE_AABB, (round(x, 3), round(y, 3)), asset.size)
        nodes.append(make_node(asset, node_id, aabb, opened=rng.random() < 0.5))
    return nodes

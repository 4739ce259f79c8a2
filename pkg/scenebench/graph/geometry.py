"""Quasi-static placement on the tabletop and inside containers."""

from typing import Iterable, Iterator

from .base import Aabb, ObjectNode, Vec3

TABLE_ID = "table_01"
TABLE_AABB = Aabb(min=(-1.5, -0.8, -0.05), max=(1.5, 0.8, 0.0))

CONTAINER_FLOOR = 0.02
SLOT_PITCH = 0.125
CLEARANCE = 0.02
GRID_PITCH = 0.05
# held objects leave the scene so they relate to nothing
PARK_CENTER: Vec3 = (0.0, -3.0, 3.0)


def footprints_overlap(a: Aabb, b: Aabb, margin: float = 0.0) -> bool:
    return (
        a.min[0] < b.max[0] + margin
        and b.min[0] < a.max[0] + margin
        and a.min[1] < b.max[1] + margin
        and b.min[1] < a.max[1] + margin
    )


def volumes_overlap(a: Aabb, b: Aabb) -> bool:
    return all(lo < b_hi and b_lo < hi for lo, hi, b_lo, b_hi in zip(a.min, a.max, b.min, b.max))


def parked(size: Vec3) -> Aabb:
    return Aabb.from_center(PARK_CENTER, size)


def resting_on(surface: Aabb, center_xy: tuple[float, float], size: Vec3) -> Aabb:
    """Box of ``size`` whose bottom face sits on the top face of ``surface``."""
    x, y = center_xy
    z = surface.max[2] + size[2] / 2
    aabb = Aabb.from_center((x, y, z), size)
    # keep the contact exact after rounding
    return aabb.translated(dz=round(surface.max[2] - aabb.min[2], 6))


def grid_points(area: Aabb, size: Vec3, pitch: float = GRID_PITCH, margin: float = CLEARANCE) -> list[tuple[float, float]]:
    """Centres on a regular grid where a footprint of ``size`` stays inside ``area``."""
    points = []
    half_x, half_y = size[0] / 2, size[1] / 2
    x0, x1 = area.min[0] + half_x + margin, area.max[0] - half_x - margin
    y0, y1 = area.min[1] + half_y + margin, area.max[1] - half_y - margin
    steps_y = int((y1 - y0) / pitch + 1e-9)
    steps_x = int((x1 - x0) / pitch + 1e-9)
    for j in range(steps_y + 1):
        for i in range(steps_x + 1):
            points.append((round(x0 + i * pitch, 6), round(y0 + j * pitch, 6)))
    return points


def container_slots(container: Aabb, pitch: float = SLOT_PITCH) -> list[tuple[float, float]]:
    """Slot centres of a container interior, row by row."""
    sx, sy, _ = container.size
    nx, ny = int(sx / pitch + 1e-9), int(sy / pitch + 1e-9)
    x0 = container.center[0] - nx * pitch / 2 + pitch / 2
    y0 = container.center[1] - ny * pitch / 2 + pitch / 2
    return [
        (round(x0 + i * pitch, 6), round(y0 + j * pitch, 6))
        for j in range(ny)
        for i in range(nx)
    ]


def slot_capacity(container_size: Vec3, pitch: float = SLOT_PITCH) -> int:
    return int(container_size[0] / pitch + 1e-9) * int(container_size[1] / pitch + 1e-9)


def fits_inside(item_size: Vec3, container_size: Vec3, pitch: float = SLOT_PITCH) -> bool:
    return (
        max(item_size[0], item_size[1]) <= pitch - 0.01
        and item_size[2] <= container_size[2] - CONTAINER_FLOOR
        and slot_capacity(container_size, pitch) > 0
    )


def in_slot(container: Aabb, slot_xy: tuple[float, float], size: Vec3) -> Aabb:
    x, y = slot_xy
    floor = container.min[2] + CONTAINER_FLOOR
    return Aabb.from_center((x, y, floor + size[2] / 2), size)


def reserved_zones(nodes: Iterable[ObjectNode]) -> list[Aabb]:
    """Footprints swept by drawers between fully closed and fully open."""
    zones = []
    for node in nodes:
        if node.category != "drawer" or node.articulation is None:
            continue
        art = node.articulation
        back = art.joint_value - art.joint_min
        front = art.joint_max - art.joint_value
        zones.append(
            Aabb(
                min=(node.aabb.min[0], round(node.aabb.min[1] - front, 6), node.aabb.min[2]),
                max=(node.aabb.max[0], round(node.aabb.max[1] + back, 6), node.aabb.max[2]),
            )
        )
    return zones


def free_spots(
    surface: Aabb,
    size: Vec3,
    obstacles: Iterable[Aabb],
    candidates: Iterable[tuple[float, float]] | None = None,
    clearance: float = CLEARANCE,
) -> Iterator[Aabb]:
    """Yield resting boxes on ``surface`` that keep ``clearance`` from every obstacle."""
    obstacles = list(obstacles)
    for xy in candidates if candidates is not None else grid_points(surface, size):
        aabb = resting_on(surface, xy, size)
        if not any(footprints_overlap(aabb, other, clearance) for other in obstacles):
            yield aabb

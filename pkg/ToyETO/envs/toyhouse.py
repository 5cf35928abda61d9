from collections import deque
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core import Variation

from .base import NOTHING_HAPPENED, RewardKind, World

START_ROOM: str = "hall"

ADJACENCY: Dict[str, Tuple[str, ...]] = {
    "hall": ("kitchen", "bedroom", "office"),
    "kitchen": ("hall", "garage"),
    "bedroom": ("hall", "bathroom"),
    "office": ("hall",),
    "garage": ("kitchen",),
    "bathroom": ("bedroom",),
}
ROOMS: Tuple[str, ...] = tuple(ADJACENCY)

# receptacle -> (room, needs to be opened first)
RECEPTACLES: Dict[str, Tuple[str, bool]] = {
    "table": ("hall", False),
    "fridge": ("kitchen", True),
    "counter": ("kitchen", False),
    "cabinet": ("bathroom", True),
    "tub": ("bathroom", False),
    "drawer": ("bedroom", True),
    "bed": ("bedroom", False),
    "desk": ("office", False),
    "locker": ("office", True),
    "box": ("garage", True),
    "rack": ("garage", False),
}

OBJECTS_SEEN: Tuple[str, ...] = ("apple", "mug", "book", "key", "towel", "pen", "plate", "cup")
OBJECTS_UNSEEN: Tuple[str, ...] = ("phone", "sponge", "remote", "bottle")


@dataclass(frozen=True)
class TaskKind:
    verb: str
    # (room the treatment happens in, flag it sets). place needs no treatment
    treatment_room: Optional[str]
    flag: Optional[str]


TASK_KINDS: Tuple[TaskKind, ...] = (
    TaskKind("put", None, None),
    TaskKind("clean", "bathroom", "clean"),
    TaskKind("heat", "kitchen", "hot"),
    TaskKind("cool", "kitchen", "cold"),
)
KINDS_BY_VERB: Dict[str, TaskKind] = {kind.verb: kind for kind in TASK_KINDS}

VERBS: Tuple[str, ...] = ("go", "look", "open", "take", "put", "clean", "heat", "cool", "inventory")
OBSERVATION_WORDS: Tuple[str, ...] = ("from", "to", "has", "in", "holding", "nothing", "is", "empty", "done")


@dataclass(frozen=True)
class HouseGoal:
    task: str
    obj: str
    source_room: str
    # hidden: the receptacle the object starts in
    source_receptacle: str
    target_receptacle: str

    @property
    def kind(self) -> TaskKind:
        return KINDS_BY_VERB[self.task]

    @property
    def instruction_words(self) -> Tuple[str, ...]:
        return (self.task, self.obj, "from", self.source_room, "to", self.target_receptacle)


@dataclass(frozen=True)
class HouseLatent:
    location: str = START_ROOM
    opened: Tuple[str, ...] = ()
    # receptacle name or "inventory"
    obj_place: str = ""
    flags: Tuple[str, ...] = ()


def shortest_path(start: str, goal: str) -> List[str]:
    """rooms to walk through from start to goal, start excluded"""
    previous: Dict[str, Optional[str]] = {start: None}
    queue: deque = deque([start])

    while queue:
        room = queue.popleft()
        if room == goal:
            break
        for neighbour in ADJACENCY[room]:
            if neighbour not in previous:
                previous[neighbour] = room
                queue.append(neighbour)

    path: List[str] = []
    room: Optional[str] = goal
    while room is not None and room != start:
        path.append(room)
        room = previous[room]

    return path[::-1]


class ToyHouse(World):
    """Household analog: find the object, optionally treat it and place it, binary reward"""

    name = "toyhouse"
    reward_kind = RewardKind.BINARY
    default_max_steps = 25
    salt = 4409

    def words(self) -> List[str]:
        return [
            *VERBS,
            *OBSERVATION_WORDS,
            *ROOMS,
            *RECEPTACLES,
            *(kind.flag for kind in TASK_KINDS if kind.flag),
            *OBJECTS_SEEN,
            *OBJECTS_UNSEEN,
            *NOTHING_HAPPENED,
        ]

    def make_goal(self, variation: Variation, rng: np.random.Generator) -> HouseGoal:
        pool = OBJECTS_SEEN if Variation(variation) is Variation.SEEN else OBJECTS_UNSEEN
        receptacles: List[str] = list(RECEPTACLES)

        kind: TaskKind = TASK_KINDS[int(rng.integers(len(TASK_KINDS)))]
        obj: str = pool[int(rng.integers(len(pool)))]
        source: str = receptacles[int(rng.integers(len(receptacles)))]

        targets: List[str] = [name for name in receptacles if name != source]
        target: str = targets[int(rng.integers(len(targets)))]

        return HouseGoal(
            task=kind.verb,
            obj=obj,
            source_room=RECEPTACLES[source][0],
            source_receptacle=source,
            target_receptacle=target,
        )

    def start(self, goal: HouseGoal) -> HouseLatent:
        return HouseLatent(obj_place=goal.source_receptacle)

    def initial_words(self, goal: HouseGoal, latent: HouseLatent) -> List[str]:
        return self._room_words(latent)

    def _receptacles_in(self, room: str) -> List[str]:
        return [name for name, (where, _) in RECEPTACLES.items() if where == room]

    def _is_open(self, latent: HouseLatent, receptacle: str) -> bool:
        return not RECEPTACLES[receptacle][1] or receptacle in latent.opened

    def _room_words(self, latent: HouseLatent) -> List[str]:
        return [latent.location, "has", *self._receptacles_in(latent.location)]

    def _satisfied(self, goal: HouseGoal, latent: HouseLatent) -> bool:
        placed: bool = latent.obj_place == goal.target_receptacle
        treated: bool = goal.kind.flag is None or goal.kind.flag in latent.flags
        return placed and treated

    def transition(
        self, goal: HouseGoal, latent: HouseLatent, words: Sequence[str]
    ) -> Tuple[HouseLatent, List[str], bool]:
        verb: Optional[str] = words[0] if words else None
        args: List[str] = list(words[1:])
        here: str = latent.location

        if verb == "go" and len(args) == 1 and args[0] in ADJACENCY[here]:
            moved = replace(latent, location=args[0])
            return moved, self._room_words(moved), False

        if verb == "look" and not args:
            visible: List[str] = [
                goal.obj
                for receptacle in self._receptacles_in(here)
                if latent.obj_place == receptacle and self._is_open(latent, receptacle)
            ]
            return latent, [*self._room_words(latent), *visible], False

        if verb == "open" and len(args) == 1 and args[0] in self._receptacles_in(here):
            receptacle: str = args[0]
            if RECEPTACLES[receptacle][1] and receptacle not in latent.opened:
                opened = replace(latent, opened=tuple(sorted(latent.opened + (receptacle,))))
                contents: List[str] = [goal.obj] if latent.obj_place == receptacle else ["empty"]
                return opened, [receptacle, "has", *contents], False

        if verb == "take" and args == [goal.obj]:
            place: str = latent.obj_place
            if place in self._receptacles_in(here) and self._is_open(latent, place):
                return replace(latent, obj_place="inventory"), ["holding", goal.obj], False

        if verb == "put" and len(args) == 3 and args[0] == goal.obj and args[1] == "in":
            receptacle = args[2]
            if (
                latent.obj_place == "inventory"
                and receptacle in self._receptacles_in(here)
                and self._is_open(latent, receptacle)
            ):
                placed = replace(latent, obj_place=receptacle)
                done: bool = self._satisfied(goal, placed)
                return placed, [goal.obj, "in", receptacle, *(["done"] if done else [])], done

        if verb in ("clean", "heat", "cool") and args == [goal.obj] and latent.obj_place == "inventory":
            kind: TaskKind = KINDS_BY_VERB[verb]
            if here == kind.treatment_room:
                flagged = replace(latent, flags=tuple(sorted(set(latent.flags) | {kind.flag})))
                return flagged, [goal.obj, "is", kind.flag], False

        if verb == "inventory" and not args:
            held: str = goal.obj if latent.obj_place == "inventory" else "nothing"
            return latent, ["holding", held], False

        return latent, list(NOTHING_HAPPENED), False

    def final_reward(self, goal: HouseGoal, latent: HouseLatent) -> float:
        return 1.0 if self._satisfied(goal, latent) else 0.0

    def is_success(self, goal: HouseGoal, latent: HouseLatent) -> bool:
        return self._satisfied(goal, latent)

    def plan(self, goal: HouseGoal) -> List[List[str]]:
        actions: List[List[str]] = []
        location: str = START_ROOM

        def walk(to: str) -> None:
            nonlocal location
            actions.extend(["go", room] for room in shortest_path(location, to))
            location = to

        walk(goal.source_room)
        actions.append(["look"])
        if RECEPTACLES[goal.source_receptacle][1]:
            actions.append(["open", goal.source_receptacle])
        actions.append(["take", goal.obj])

        kind: TaskKind = goal.kind
        if kind.treatment_room is not None:
            walk(kind.treatment_room)
            actions.append([kind.verb, goal.obj])

        target_room: str = RECEPTACLES[goal.target_receptacle][0]
        walk(target_room)
        if RECEPTACLES[goal.target_receptacle][1]:
            actions.append(["open", goal.target_receptacle])
        actions.append(["put", goal.obj, "in", goal.target_receptacle])

        return actions

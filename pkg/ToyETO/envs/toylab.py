from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core import Variation

from .base import NOTHING_HAPPENED, RewardKind, World

HALLWAY: str = "hallway"
ROOMS: Tuple[str, ...] = ("kitchen", "workshop")

OBJECTS_SEEN: Tuple[str, ...] = ("water", "milk", "butter", "wax", "juice", "clay", "soup", "honey")
OBJECTS_UNSEEN: Tuple[str, ...] = ("oil", "syrup", "resin", "tar")

DISTRACTORS_PER_ROOM: int = 2


@dataclass(frozen=True)
class TaskType:
    verb: str
    device: str
    room: str
    result: str
    waits: int


TASK_TYPES: Tuple[TaskType, ...] = (
    TaskType("boil", "stove", "kitchen", "boiling", 2),
    TaskType("freeze", "freezer", "kitchen", "frozen", 3),
    TaskType("wash", "sink", "kitchen", "clean", 1),
    TaskType("chill", "fridge", "kitchen", "cold", 2),
    TaskType("melt", "furnace", "workshop", "molten", 2),
    TaskType("dry", "dryer", "workshop", "dry", 1),
    TaskType("heat", "heater", "workshop", "hot", 1),
    TaskType("charge", "charger", "workshop", "charged", 2),
)
TASKS_BY_VERB: Dict[str, TaskType] = {task.verb: task for task in TASK_TYPES}
DEVICES: Dict[str, TaskType] = {task.device: task for task in TASK_TYPES}

VERBS: Tuple[str, ...] = ("look", "open", "go", "focus", "take", "put", "activate", "deactivate", "wait")
OBSERVATION_WORDS: Tuple[str, ...] = (
    "from", "in", "has", "door", "on", "off", "taken", "wrong", "time", "passes", "is", "empty",
)

# focus, hold, inside device, device running, transformed, transformed and held
N_SUBGOALS: int = 6


@dataclass(frozen=True)
class LabGoal:
    task: str
    target: str
    target_room: str
    # objects lying in each room at the start, target included
    layout: Tuple[Tuple[str, Tuple[str, ...]], ...]

    @property
    def task_type(self) -> TaskType:
        return TASKS_BY_VERB[self.task]

    @property
    def instruction_words(self) -> Tuple[str, ...]:
        return (self.task, self.target, "from", self.target_room)


@dataclass(frozen=True)
class LabLatent:
    location: str = HALLWAY
    open_doors: Tuple[str, ...] = ()
    open_devices: Tuple[str, ...] = ()
    active_devices: Tuple[str, ...] = ()
    # (object, place) where place is a room, a device or "inventory"
    places: Tuple[Tuple[str, str], ...] = ()
    # (object, device, waits spent inside the running device)
    exposure: Tuple[Tuple[str, str, int], ...] = ()
    states: Tuple[Tuple[str, str], ...] = ()
    focused: Optional[str] = None
    wrong_focus: bool = False
    achieved: int = 0

    def place_of(self, obj: str) -> Optional[str]:
        return dict(self.places).get(obj)

    def state_of(self, obj: str) -> Optional[str]:
        return dict(self.states).get(obj)


def _with(pairs: Tuple[Tuple[str, str], ...], key: str, value: str) -> Tuple[Tuple[str, str], ...]:
    updated: Dict[str, str] = dict(pairs)
    updated[key] = value
    return tuple(sorted(updated.items()))


class ToyLab(World):
    """Science lab analog: ordered subgoals, a device to run and a focus action that can end the task"""

    name = "toylab"
    reward_kind = RewardKind.DENSE_SUBGOAL
    default_max_steps = 30
    salt = 2707

    def words(self) -> List[str]:
        return [
            *VERBS,
            *OBSERVATION_WORDS,
            HALLWAY,
            *ROOMS,
            *(task.verb for task in TASK_TYPES),
            *(task.device for task in TASK_TYPES),
            *(task.result for task in TASK_TYPES),
            *OBJECTS_SEEN,
            *OBJECTS_UNSEEN,
            *NOTHING_HAPPENED,
        ]

    def make_goal(self, variation: Variation, rng: np.random.Generator) -> LabGoal:
        pool = OBJECTS_SEEN if Variation(variation) is Variation.SEEN else OBJECTS_UNSEEN

        task: TaskType = TASK_TYPES[int(rng.integers(len(TASK_TYPES)))]
        target: str = pool[int(rng.integers(len(pool)))]
        target_room: str = ROOMS[int(rng.integers(len(ROOMS)))]

        others: List[str] = [obj for obj in pool if obj != target]
        shuffled: List[str] = [others[int(i)] for i in rng.permutation(len(others))]

        layout: List[Tuple[str, Tuple[str, ...]]] = []
        for room_idx, room in enumerate(ROOMS):
            chosen: List[str] = shuffled[room_idx * DISTRACTORS_PER_ROOM:(room_idx + 1) * DISTRACTORS_PER_ROOM]
            if room == target_room:
                chosen = chosen + [target]
            layout.append((room, tuple(sorted(chosen))))

        return LabGoal(task=task.verb, target=target, target_room=target_room, layout=tuple(layout))

    def start(self, goal: LabGoal) -> LabLatent:
        places = tuple(sorted((obj, room) for room, objects in goal.layout for obj in objects))
        return LabLatent(places=places)

    def initial_words(self, goal: LabGoal, latent: LabLatent) -> List[str]:
        return ["in", HALLWAY]

    def _visible(self, latent: LabLatent, obj: str) -> bool:
        place = latent.place_of(obj)
        return place is not None and place in (latent.location, "inventory")

    def _devices_here(self, latent: LabLatent) -> List[str]:
        return [task.device for task in TASK_TYPES if task.room == latent.location]

    def _subgoals(self, goal: LabGoal, latent: LabLatent) -> List[bool]:
        task: TaskType = goal.task_type
        place = latent.place_of(goal.target)
        transformed: bool = latent.state_of(goal.target) == task.result

        return [
            latent.focused == goal.target,
            place == "inventory",
            place == task.device,
            place == task.device and task.device in latent.active_devices,
            transformed,
            transformed and place == "inventory",
        ]

    def _advance(self, goal: LabGoal, latent: LabLatent) -> LabLatent:
        """subgoals only count in order and stay achieved once reached"""
        achieved: int = latent.achieved
        flags: List[bool] = self._subgoals(goal, latent)

        while achieved < N_SUBGOALS and flags[achieved]:
            achieved += 1

        return replace(latent, achieved=achieved)

    def _wait(self, latent: LabLatent) -> LabLatent:
        exposure: Dict[Tuple[str, str], int] = {(obj, device): count for obj, device, count in latent.exposure}
        states = latent.states

        for obj, place in latent.places:
            if place in latent.active_devices:
                key = (obj, place)
                exposure[key] = exposure.get(key, 0) + 1
                if exposure[key] >= DEVICES[place].waits:
                    states = _with(states, obj, DEVICES[place].result)

        return replace(
            latent,
            exposure=tuple(sorted((obj, device, count) for (obj, device), count in exposure.items())),
            states=states,
        )

    def _apply(
        self, goal: LabGoal, latent: LabLatent, words: Sequence[str]
    ) -> Tuple[Optional[LabLatent], List[str]]:
        """returns (None, []) when the action does nothing"""
        verb: Optional[str] = words[0] if words else None
        args: List[str] = list(words[1:])
        here: str = latent.location

        if verb == "look" and not args:
            if here == HALLWAY:
                doors = [room for room in ROOMS if room in latent.open_doors]
                return latent, [HALLWAY, "has", *(doors or ["empty"])]
            objects = sorted(obj for obj, place in latent.places if place == here)
            return latent, [here, "has", *objects, *self._devices_here(latent)]

        if verb == "open" and len(args) == 1:
            if args[0] in ROOMS and here == HALLWAY and args[0] not in latent.open_doors:
                return replace(latent, open_doors=tuple(sorted(latent.open_doors + (args[0],)))), [args[0], "door", "open"]
            if args[0] in self._devices_here(latent) and args[0] not in latent.open_devices:
                return replace(latent, open_devices=tuple(sorted(latent.open_devices + (args[0],)))), [args[0], "open"]

        if verb == "go" and len(args) == 1 and args[0] != here:
            if args[0] == HALLWAY or (here == HALLWAY and args[0] in latent.open_doors):
                return replace(latent, location=args[0]), ["in", args[0]]

        if verb == "focus" and len(args) == 1 and latent.focused is None and self._visible(latent, args[0]):
            if args[0] == goal.target:
                return replace(latent, focused=args[0]), ["focus", "on", args[0]]
            return replace(latent, wrong_focus=True), ["wrong", "focus"]

        if verb == "take" and len(args) == 1:
            place = latent.place_of(args[0])
            from_room: bool = place == here
            from_device: bool = (
                place in self._devices_here(latent)
                and place in latent.open_devices
                and place not in latent.active_devices
            )
            if from_room or from_device:
                return replace(latent, places=_with(latent.places, args[0], "inventory")), ["taken", args[0]]

        if verb == "put" and len(args) == 3 and args[1] == "in":
            obj, device = args[0], args[2]
            if (
                latent.place_of(obj) == "inventory"
                and device in self._devices_here(latent)
                and device in latent.open_devices
            ):
                return replace(latent, places=_with(latent.places, obj, device)), [obj, "in", device]

        if verb == "activate" and len(args) == 1:
            if args[0] in self._devices_here(latent) and args[0] not in latent.active_devices:
                return replace(latent, active_devices=tuple(sorted(latent.active_devices + (args[0],)))), [args[0], "on"]

        if verb == "deactivate" and len(args) == 1 and args[0] in latent.active_devices and args[0] in self._devices_here(latent):
            remaining = tuple(device for device in latent.active_devices if device != args[0])
            return replace(latent, active_devices=remaining), [args[0], "off"]

        if verb == "wait" and not args:
            waited = self._wait(latent)
            state = waited.state_of(goal.target)
            if state is not None and state != latent.state_of(goal.target):
                return waited, [goal.target, "is", state]
            return waited, ["time", "passes"]

        return None, []

    def transition(
        self, goal: LabGoal, latent: LabLatent, words: Sequence[str]
    ) -> Tuple[LabLatent, List[str], bool]:
        new_latent, observation = self._apply(goal, latent, words)

        if new_latent is None:
            return latent, list(NOTHING_HAPPENED), False

        new_latent = self._advance(goal, new_latent)

        return new_latent, observation, new_latent.wrong_focus or new_latent.achieved == N_SUBGOALS

    def final_reward(self, goal: LabGoal, latent: LabLatent) -> float:
        return latent.achieved / N_SUBGOALS

    def progress(self, goal: LabGoal, latent: LabLatent, done: bool) -> float:
        return latent.achieved / N_SUBGOALS

    def is_success(self, goal: LabGoal, latent: LabLatent) -> bool:
        return latent.achieved == N_SUBGOALS

    def plan(self, goal: LabGoal) -> List[List[str]]:
        task: TaskType = goal.task_type

        actions: List[List[str]] = [
            ["open", goal.target_room],
            ["go", goal.target_room],
            ["look"],
            ["focus", goal.target],
            ["take", goal.target],
        ]

        if task.room != goal.target_room:
            actions += [["go", HALLWAY], ["open", task.room], ["go", task.room]]

        actions += [
            ["open", task.device],
            ["put", goal.target, "in", task.device],
            ["activate", task.device],
            *(["wait"] for _ in range(task.waits)),
            ["deactivate", task.device],
            ["take", goal.target],
        ]

        return actions

from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core import Variation

from .base import NOTHING_HAPPENED, RewardKind, World

CATEGORIES_SEEN: Tuple[str, ...] = ("shirt", "scarf", "boots", "lamp", "mug", "chair", "bag", "watch")
CATEGORIES_UNSEEN: Tuple[str, ...] = ("hat", "desk")
MATERIALS: Tuple[str, ...] = ("wool", "cotton", "leather", "steel", "glass")
COLORS: Tuple[str, ...] = ("red", "blue", "green", "black", "white")
SIZES: Tuple[str, ...] = ("small", "medium", "large")
PRICES: Tuple[int, ...] = tuple(range(10, 100, 10))

ITEMS_PER_CATEGORY: int = 5
RESULTS_SHOWN: int = 3
CATALOG_SEED: int = 7

# material, color and size are the required attributes; the price bound is the extra slot
REQUIRED_ATTRIBUTES: int = 3

VERBS: Tuple[str, ...] = ("search", "click", "select", "back", "buy")
PAGE_WORDS: Tuple[str, ...] = (
    "want", "under", "page", "results", "none", "item", "colors", "sizes", "selected", "bought",
)


@dataclass(frozen=True)
class Product:
    id: str
    category: str
    material: str
    price: int
    colors: Tuple[str, ...]
    sizes: Tuple[str, ...]


def build_catalog() -> Tuple[Product, ...]:
    """50 products, 5 per category, drawn once from a fixed seed"""
    rng: np.random.Generator = np.random.default_rng(CATALOG_SEED)

    catalog: List[Product] = []

    for category_idx, category in enumerate(CATEGORIES_SEEN + CATEGORIES_UNSEEN):
        for item_idx in range(ITEMS_PER_CATEGORY):
            color_idx = np.sort(rng.choice(len(COLORS), size=3, replace=False))
            size_idx = np.sort(rng.choice(len(SIZES), size=2, replace=False))

            catalog.append(
                Product(
                    id=f"p{category_idx * ITEMS_PER_CATEGORY + item_idx:02d}",
                    category=category,
                    material=MATERIALS[int(rng.integers(len(MATERIALS)))],
                    price=PRICES[int(rng.integers(len(PRICES)))],
                    colors=tuple(COLORS[i] for i in color_idx),
                    sizes=tuple(SIZES[i] for i in size_idx),
                )
            )

    return tuple(catalog)


@dataclass(frozen=True)
class ShopGoal:
    category: str
    material: str
    color: str
    size: str
    budget: int
    # the cheapest product of the requested material. It is always the first search result
    target_id: str

    @property
    def instruction_words(self) -> Tuple[str, ...]:
        return ("want", self.material, self.category, self.color, self.size, "under", str(self.budget))


@dataclass(frozen=True)
class ShopLatent:
    page: str = "search"
    results: Tuple[str, ...] = ()
    item: Optional[str] = None
    color: Optional[str] = None
    size: Optional[str] = None
    bought: Optional[str] = None


class ToyShop(World):
    """Web shopping analog: search, open a product, pick its options and buy it"""

    name = "toyshop"
    reward_kind = RewardKind.DENSE_MATCH
    default_max_steps = 15
    salt = 1301

    def __init__(self) -> None:
        self.catalog: Tuple[Product, ...] = build_catalog()
        self.products: Dict[str, Product] = {product.id: product for product in self.catalog}

    def words(self) -> List[str]:
        return [
            *VERBS,
            *PAGE_WORDS,
            *CATEGORIES_SEEN,
            *CATEGORIES_UNSEEN,
            *MATERIALS,
            *COLORS,
            *SIZES,
            *(str(price) for price in PRICES),
            *(product.id for product in self.catalog),
            *NOTHING_HAPPENED,
        ]

    def make_goal(self, variation: Variation, rng: np.random.Generator) -> ShopGoal:
        categories = CATEGORIES_SEEN if Variation(variation) is Variation.SEEN else CATEGORIES_UNSEEN

        category: str = categories[int(rng.integers(len(categories)))]

        in_category: List[Product] = [product for product in self.catalog if product.category == category]

        materials: List[str] = sorted({product.material for product in in_category}, key=MATERIALS.index)
        material: str = materials[int(rng.integers(len(materials)))]

        target: Product = min(
            (product for product in in_category if product.material == material),
            key=lambda product: (product.price, product.id),
        )

        budget: int = min(target.price + 10 * int(rng.integers(3)), PRICES[-1])

        return ShopGoal(
            category=category,
            material=material,
            color=target.colors[int(rng.integers(len(target.colors)))],
            size=target.sizes[int(rng.integers(len(target.sizes)))],
            budget=budget,
            target_id=target.id,
        )

    def start(self, goal: ShopGoal) -> ShopLatent:
        return ShopLatent()

    def initial_words(self, goal: ShopGoal, latent: ShopLatent) -> List[str]:
        return ["page", "search"]

    def _search(self, query: Sequence[str]) -> Tuple[str, ...]:
        """products of the queried categories, material matches first, then cheapest"""
        matches: List[Product] = [product for product in self.catalog if product.category in query]

        matches.sort(key=lambda product: (product.material not in query, product.price, product.id))

        return tuple(product.id for product in matches[:RESULTS_SHOWN])

    def _results_words(self, results: Sequence[str]) -> List[str]:
        if not results:
            return ["results", "none"]

        words: List[str] = ["results"]
        for product_id in results:
            product: Product = self.products[product_id]
            words.extend([product.id, product.material, str(product.price)])
        return words

    def _item_words(self, product: Product) -> List[str]:
        return [
            "item", product.id, product.material, str(product.price),
            "colors", *product.colors,
            "sizes", *product.sizes,
        ]

    def transition(
        self, goal: ShopGoal, latent: ShopLatent, words: Sequence[str]
    ) -> Tuple[ShopLatent, List[str], bool]:
        verb: Optional[str] = words[0] if words else None
        args: List[str] = list(words[1:])

        if verb == "search" and args and latent.page in ("search", "results"):
            results = self._search(args)
            return replace(latent, page="results", results=results, item=None), self._results_words(results), False

        if verb == "click" and len(args) == 1 and latent.page == "results" and args[0] in latent.results:
            product = self.products[args[0]]
            new_latent = replace(latent, page="item", item=product.id, color=None, size=None)
            return new_latent, self._item_words(product), False

        if verb == "select" and len(args) == 1 and latent.page == "item":
            product = self.products[latent.item]
            if args[0] in product.colors:
                return replace(latent, color=args[0]), ["selected", args[0]], False
            if args[0] in product.sizes:
                return replace(latent, size=args[0]), ["selected", args[0]], False

        if verb == "back" and not args:
            if latent.page == "item":
                return replace(latent, page="results", item=None), self._results_words(latent.results), False
            if latent.page == "results":
                return replace(latent, page="search", results=()), ["page", "search"], False

        if verb == "buy" and not args and latent.page == "item":
            return replace(latent, page="done", bought=latent.item), ["bought", latent.item], True

        return latent, list(NOTHING_HAPPENED), False

    def final_reward(self, goal: ShopGoal, latent: ShopLatent) -> float:
        if latent.bought is None:
            return 0.0

        product: Product = self.products[latent.bought]

        matched: int = (
            int(product.material == goal.material)
            + int(latent.color == goal.color)
            + int(latent.size == goal.size)
        )
        price_ok: int = int(product.price <= goal.budget)

        return (matched + price_ok) / (REQUIRED_ATTRIBUTES + 1)

    def is_success(self, goal: ShopGoal, latent: ShopLatent) -> bool:
        return self.final_reward(goal, latent) == 1.0

    def plan(self, goal: ShopGoal) -> List[List[str]]:
        return [
            ["search", goal.material, goal.category],
            ["click", goal.target_id],
            ["select", goal.color],
            ["select", goal.size],
            ["buy"],
        ]

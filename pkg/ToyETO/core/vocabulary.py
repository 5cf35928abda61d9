import hashlib
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

from .errors import VocabularyError

PAD: str = "<pad>"
INST: str = "<inst>"
ACT: str = "<act>"
OBS: str = "<obs>"
EOA: str = "<eoa>"
EOE: str = "<eoe>"

# anything an agent writes before this token is rationale and ignored by the environments
RATIONALE_DELIMITER: str = "=>"

# order matters: <pad> has to be id 0 because the policy left-pads contexts with id 0
SPECIAL_TOKENS: Tuple[str, ...] = (PAD, INST, ACT, OBS, EOA, EOE)


@dataclass(frozen=True)
class Vocabulary:
    """Ordered list of distinct symbols. Token ids are the dense positions 0..|V|-1"""

    tokens: Tuple[str, ...]
    _index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(set(self.tokens)) != len(self.tokens):
            raise VocabularyError("The vocabulary has duplicated tokens")

        if tuple(self.tokens[: len(SPECIAL_TOKENS)]) != SPECIAL_TOKENS:
            raise VocabularyError(
                f"The vocabulary has to start with the special markers {', '.join(SPECIAL_TOKENS)}"
            )

        object.__setattr__(self, "_index", {token: idx for idx, token in enumerate(self.tokens)})

    @classmethod
    def build(cls, words: Iterable[str]) -> "Vocabulary":
        """Function that builds a vocabulary from the words an environment can produce

        Parameters

        words : Iterable[str]
            words in the order they should receive ids. Duplicates are dropped, keeping the first one

        Returns

        Vocabulary
            returns a vocabulary with the special markers and the rationale delimiter first
        """
        ordered: List[str] = list(SPECIAL_TOKENS) + [RATIONALE_DELIMITER]

        seen = set(ordered)

        for word in words:
            if not word or any(char.isspace() for char in word):
                raise VocabularyError(f"The word {word!r} can not be a token")
            if word not in seen:
                seen.add(word)
                ordered.append(word)

        return cls(tuple(ordered))

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def lookup(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise VocabularyError(f"The token {token!r} is not in the vocabulary") from None

    def detokenize(self, token_id: int) -> str:
        if not self.is_valid(token_id):
            raise VocabularyError(f"The token id {token_id} is outside of 0..{len(self) - 1}")
        return self.tokens[token_id]

    def is_valid(self, token_id: int) -> bool:
        return 0 <= int(token_id) < len(self.tokens)

    def tokenize(self, text: str) -> Tuple[int, ...]:
        """splits on whitespace and looks every word up"""
        return tuple(self.lookup(word) for word in text.split())

    def to_text(self, token_ids: Sequence[int]) -> str:
        return " ".join(self.detokenize(token_id) for token_id in token_ids)

    @property
    def pad_id(self) -> int:
        return 0

    @property
    def inst_id(self) -> int:
        return self._index[INST]

    @property
    def act_id(self) -> int:
        return self._index[ACT]

    @property
    def obs_id(self) -> int:
        return self._index[OBS]

    @property
    def eoa_id(self) -> int:
        return self._index[EOA]

    @property
    def eoe_id(self) -> int:
        return self._index[EOE]

    @property
    def delimiter_id(self) -> int:
        return self._index[RATIONALE_DELIMITER]

    @property
    def vocab_hash(self) -> str:
        """sha256 over the newline joined token list. Checkpoints store it"""
        return hashlib.sha256("\n".join(self.tokens).encode("utf-8")).hexdigest()

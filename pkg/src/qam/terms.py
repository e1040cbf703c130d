"""Term language of the quantum abstract machine.

Messages, channels, actions, processes, membranes and configurations are
immutable values.  Multiset equality is realised by :func:`canonical`, which
sorts molecules and membranes by a fixed total order on terms and drops the
identity elements (``0`` processes and empty membranes).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Union


class QamError(Exception):
    """Base class of all errors raised by the package."""


class ClassificationError(QamError):
    pass


class SubstitutionError(QamError):
    pass


class NotApplicable(QamError):
    """A rewrite was requested where the rule does not match."""


class Kind(enum.IntEnum):
    QUANTUM = 0
    PROJECTIVE = 1
    CLASSICAL = 2


class MsgClass(enum.Enum):
    QUANTUM = "quantum"
    CLASSICAL = "classical"


class Term:
    __slots__ = ()

    def __str__(self):
        return show(self)


class Message(Term):
    __slots__ = ()


@dataclass(frozen=True)
class ChannelName(Term):
    kind: Kind
    base: str
    intention: Optional[int] = None

    def bar(self) -> "ChannelName":
        """The projective channel derived from this quantum channel."""
        return ChannelName(Kind.PROJECTIVE, self.base)

    @property
    def is_quantum(self) -> bool:
        return self.kind is Kind.QUANTUM


def qchan(base: str, intention: Optional[int] = None) -> ChannelName:
    return ChannelName(Kind.QUANTUM, base, intention)


def pchan(base: str) -> ChannelName:
    return ChannelName(Kind.PROJECTIVE, base)


def cchan(base: str) -> ChannelName:
    return ChannelName(Kind.CLASSICAL, base)


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Blank(Message):
    pass


@dataclass(frozen=True)
class Name(Message):
    name: str


@dataclass(frozen=True)
class Channeled(Message):
    channel: ChannelName
    payload: Term


@dataclass(frozen=True)
class ClassicalResidue(Message):
    inner: Term


@dataclass(frozen=True)
class QuantumResidue(Message):
    inner: Term


@dataclass(frozen=True)
class OpaqueMix(Message):
    left: Term
    right: Term


BLANK = Blank()

Payload = Union[Message, ChannelName, Var]
ChannelRef = Union[ChannelName, Var]


# -- actions and processes --------------------------------------------------

class Action(Term):
    __slots__ = ()


@dataclass(frozen=True)
class NewChannel(Action):
    channel: ChannelRef


@dataclass(frozen=True)
class SendClassical(Action):
    channel: ChannelRef
    payload: Payload


@dataclass(frozen=True)
class Receive(Action):
    channel: ChannelRef
    var: str


@dataclass(frozen=True)
class Encode(Action):
    channel: ChannelRef
    payload: Payload


@dataclass(frozen=True)
class Decode(Action):
    channel: ChannelRef
    var: str


class Process(Term):
    __slots__ = ()


@dataclass(frozen=True)
class Nil(Process):
    pass


@dataclass(frozen=True)
class Seq(Process):
    action: Action
    cont: Process


@dataclass(frozen=True)
class Choice(Process):
    left: Process
    right: Process


@dataclass(frozen=True)
class Repl(Process):
    body: Process
    spawned: int = 0


NIL = Nil()


def seq(*actions: Action, then: Process = NIL) -> Process:
    """Build ``a1; a2; ...; then``."""
    proc = then
    for act in reversed(actions):
        proc = Seq(act, proc)
    return proc


Molecule = Union[Process, Message]


@dataclass(frozen=True)
class Membrane:
    molecules: tuple
    location: Optional[str] = None

    def resources(self):
        return [m for m in self.molecules if isinstance(m, Message)]

    def processes(self):
        return [m for m in self.molecules if isinstance(m, Process)]


@dataclass(frozen=True)
class Airlock:
    left: int
    channel: ChannelName
    content: Message
    right: int


@dataclass(frozen=True)
class Configuration:
    membranes: tuple
    airlock: Optional[Airlock] = None

    def __len__(self):
        return len(self.membranes)


def membrane(*molecules, location: Optional[str] = None) -> Membrane:
    return Membrane(tuple(molecules), location)


def configuration(*membranes: Membrane) -> Configuration:
    return Configuration(tuple(membranes))


# -- labels ---------------------------------------------------------------

class Label:
    __slots__ = ()

    def __str__(self):
        return show_label(self)


@dataclass(frozen=True)
class Silent(Label):
    pass


@dataclass(frozen=True)
class Chan(Label):
    channel: ChannelName


@dataclass(frozen=True)
class ChanMsg(Label):
    channel: ChannelName
    content: Message


@dataclass(frozen=True)
class Classical(Label):
    channel: ChannelName
    payload: Payload


@dataclass(frozen=True)
class Rated(Label):
    rate: Fraction
    src: str
    dst: str

    def __post_init__(self):
        if not 0 <= self.rate <= 1:
            raise ValueError(f"rate {self.rate} outside [0, 1]")


SILENT = Silent()


# -- total order ------------------------------------------------------------

_TAGS = {
    Blank: 0, Name: 1, ChannelName: 2, Var: 3, Channeled: 4,
    ClassicalResidue: 5, QuantumResidue: 6, OpaqueMix: 7,
    NewChannel: 20, SendClassical: 21, Receive: 22, Encode: 23, Decode: 24,
    Nil: 30, Seq: 31, Choice: 32, Repl: 33,
}


@lru_cache(maxsize=None)
def term_key(t: Term) -> tuple:
    """Lexicographic sort key on (constructor tag, children)."""
    tag = _TAGS[type(t)]
    if isinstance(t, (Blank, Nil)):
        return (tag,)
    if isinstance(t, (Name, Var)):
        return (tag, t.name)
    if isinstance(t, ChannelName):
        return (tag, int(t.kind), t.base, -1 if t.intention is None else t.intention)
    if isinstance(t, Channeled):
        return (tag, term_key(t.channel), term_key(t.payload))
    if isinstance(t, (ClassicalResidue, QuantumResidue)):
        return (tag, term_key(t.inner))
    if isinstance(t, (OpaqueMix, Choice)):
        return (tag, term_key(t.left), term_key(t.right))
    if isinstance(t, NewChannel):
        return (tag, term_key(t.channel))
    if isinstance(t, (SendClassical, Encode)):
        return (tag, term_key(t.channel), term_key(t.payload))
    if isinstance(t, (Receive, Decode)):
        return (tag, term_key(t.channel), t.var)
    if isinstance(t, Seq):
        return (tag, term_key(t.action), term_key(t.cont))
    if isinstance(t, Repl):
        return (tag, term_key(t.body), t.spawned)
    raise TypeError(f"not a term: {t!r}")


def membrane_key(m: Membrane) -> tuple:
    loc = (0,) if m.location is None else (1, m.location)
    return (loc, tuple(term_key(x) for x in m.molecules))


def canonical_membrane(m: Membrane) -> Membrane:
    mols = [x for x in m.molecules if not isinstance(x, Nil)]
    mols.sort(key=term_key)
    return Membrane(tuple(mols), m.location)


def canonical_with_map(membranes) -> tuple[Configuration, list]:
    """Canonicalise a membrane list, returning the index map old -> new.

    Entries of the map are ``None`` for membranes removed as empty.
    """
    normed = [canonical_membrane(m) for m in membranes]
    live = [(membrane_key(m), i) for i, m in enumerate(normed) if m.molecules]
    live.sort()
    index_map: list = [None] * len(normed)
    for new, (_, old) in enumerate(live):
        index_map[old] = new
    return Configuration(tuple(normed[i] for _, i in live)), index_map


def canonical(c: Configuration) -> Configuration:
    out, index_map = canonical_with_map(c.membranes)
    if c.airlock is not None:
        a = c.airlock
        left, right = index_map[a.left], index_map[a.right]
        if left is not None and right is not None:
            out = Configuration(out.membranes, Airlock(left, a.channel, a.content, right))
    return out


# -- classification ----------------------------------------------------------

def message_class(m: Term) -> MsgClass:
    """Quantum/classical class of a message per the message grammar.

    Channel names used as data are classical: exchanging a name grants no
    access to the resource it labels.
    """
    if isinstance(m, (Blank, Name)):
        return MsgClass.QUANTUM
    if isinstance(m, ChannelName):
        return MsgClass.CLASSICAL
    if isinstance(m, ClassicalResidue):
        return MsgClass.CLASSICAL
    if isinstance(m, QuantumResidue):
        return message_class(m.inner)
    if isinstance(m, Channeled):
        kind = m.channel.kind
        if kind is Kind.QUANTUM:
            return MsgClass.QUANTUM
        return message_class(m.payload)
    if isinstance(m, OpaqueMix):
        raise ClassificationError(f"irreducible mixed residue {show(m)}")
    if isinstance(m, Var):
        raise ClassificationError(f"unbound variable {m.name}")
    raise ClassificationError(f"not a message: {m!r}")


def is_classical(m: Term) -> bool:
    try:
        return message_class(m) is MsgClass.CLASSICAL
    except ClassificationError:
        return False


def is_quantum(m: Term) -> bool:
    try:
        return message_class(m) is MsgClass.QUANTUM
    except ClassificationError:
        return False


# -- substitution -------------------------------------------------------------

def _subst_term(t: Term, var: str, value: Term) -> Term:
    if isinstance(t, Var):
        return value if t.name == var else t
    if isinstance(t, Channeled):
        return Channeled(t.channel, _subst_term(t.payload, var, value))
    if isinstance(t, ClassicalResidue):
        return ClassicalResidue(_subst_term(t.inner, var, value))
    if isinstance(t, QuantumResidue):
        return QuantumResidue(_subst_term(t.inner, var, value))
    if isinstance(t, OpaqueMix):
        return OpaqueMix(_subst_term(t.left, var, value), _subst_term(t.right, var, value))
    return t


def _subst_channel(ch: ChannelRef, var: str, value: Term) -> ChannelRef:
    if isinstance(ch, Var) and ch.name == var:
        if not isinstance(value, ChannelName):
            raise SubstitutionError(f"{show(value)} substituted into a channel position")
        return value
    return ch


def substitute(p: Process, var: str, value: Term) -> Process:
    """Replace every free occurrence of ``var`` in ``p`` (no class check)."""
    if isinstance(p, Nil):
        return p
    if isinstance(p, Choice):
        return Choice(substitute(p.left, var, value), substitute(p.right, var, value))
    if isinstance(p, Repl):
        return Repl(substitute(p.body, var, value), p.spawned)
    a = p.action
    if isinstance(a, NewChannel):
        act = NewChannel(_subst_channel(a.channel, var, value))
    elif isinstance(a, (SendClassical, Encode)):
        act = type(a)(_subst_channel(a.channel, var, value), _subst_term(a.payload, var, value))
    else:
        act = type(a)(_subst_channel(a.channel, var, value), a.var)
        if a.var == var:
            return Seq(act, p.cont)  # shadowed below this binder
    return Seq(act, substitute(p.cont, var, value))


def substitute_classical(p: Process, var: str, value: Term) -> Process:
    """Replace every free occurrence of ``var`` by a classical message."""
    if message_class(value) is not MsgClass.CLASSICAL:
        raise SubstitutionError(f"refusing to copy quantum message {show(value)}")
    return substitute(p, var, value)


def _replace_first_payload(p: Process, alpha: ChannelName, res: Message):
    if isinstance(p, Nil):
        return p, False
    if isinstance(p, Choice):
        left, done = _replace_first_payload(p.left, alpha, res)
        if done:
            return Choice(left, p.right), True
        right, done = _replace_first_payload(p.right, alpha, res)
        return Choice(p.left, right), done
    if isinstance(p, Repl):
        body, done = _replace_first_payload(p.body, alpha, res)
        return Repl(body, p.spawned), done
    a = p.action
    if isinstance(a, Encode) and a.payload == alpha:
        return Seq(Encode(a.channel, res), p.cont), True
    cont, done = _replace_first_payload(p.cont, alpha, res)
    return Seq(a, cont), done


def substitute_quantum_once(p: Process, alpha: ChannelName, res: Message) -> Process:
    """Localise ``res = alpha.q`` into the earliest encode payload naming ``alpha``."""
    if not (isinstance(res, Channeled) and res.channel == alpha):
        raise SubstitutionError(f"{show(res)} is not a resource on {show(alpha)}")
    out, done = _replace_first_payload(p, alpha, res)
    if not done:
        raise NotApplicable(f"no encode payload {show(alpha)} in process")
    return out


def count_payload(p: Process, target: Term) -> int:
    """Number of encode payloads equal to ``target`` in ``p``."""
    if isinstance(p, Nil):
        return 0
    if isinstance(p, Choice):
        return count_payload(p.left, target) + count_payload(p.right, target)
    if isinstance(p, Repl):
        return count_payload(p.body, target)
    hit = isinstance(p.action, Encode) and p.action.payload == target
    return int(hit) + count_payload(p.cont, target)


def binders(p: Process) -> list:
    if isinstance(p, Nil):
        return []
    if isinstance(p, Choice):
        return binders(p.left) + binders(p.right)
    if isinstance(p, Repl):
        return binders(p.body)
    own = [p.action.var] if isinstance(p.action, (Receive, Decode)) else []
    return own + binders(p.cont)


def config_binders(c: Configuration) -> list:
    out = []
    for m in c.membranes:
        for x in m.processes():
            out.extend(binders(x))
    return out


def subterms(t):
    """Yield ``t`` and all nested terms (messages, channels, actions)."""
    yield t
    if isinstance(t, Channeled):
        yield from subterms(t.channel)
        yield from subterms(t.payload)
    elif isinstance(t, (ClassicalResidue, QuantumResidue)):
        yield from subterms(t.inner)
    elif isinstance(t, (OpaqueMix, Choice)):
        yield from subterms(t.left)
        yield from subterms(t.right)
    elif isinstance(t, Repl):
        yield from subterms(t.body)
    elif isinstance(t, Seq):
        yield from subterms(t.action)
        yield from subterms(t.cont)
    elif isinstance(t, Action):
        yield from subterms(t.channel)
        if isinstance(t, (SendClassical, Encode)):
            yield from subterms(t.payload)


# -- printing ---------------------------------------------------------------

def show(t: Term) -> str:
    """Surface syntax of a term."""
    if isinstance(t, Blank):
        return "blank"
    if isinstance(t, (Name, Var)):
        return t.name
    if isinstance(t, ChannelName):
        return f"bar({t.base})" if t.kind is Kind.PROJECTIVE else t.base
    if isinstance(t, Channeled):
        return f"{show(t.channel)}.{show(t.payload)}"
    if isinstance(t, ClassicalResidue):
        return f"rbar({show(t.inner)})"
    if isinstance(t, QuantumResidue):
        return f"up({show(t.inner)})"
    if isinstance(t, OpaqueMix):
        return f"mix({show(t.left)}, {show(t.right)})"
    if isinstance(t, NewChannel):
        return f"new({show(t.channel)})"
    if isinstance(t, SendClassical):
        return f"send({show(t.channel)}, {show(t.payload)})"
    if isinstance(t, Receive):
        return f"recv({show(t.channel)}, {t.var})"
    if isinstance(t, Encode):
        return f"enc({show(t.channel)}, {show(t.payload)})"
    if isinstance(t, Decode):
        return f"dec({show(t.channel)}, {t.var})"
    if isinstance(t, Nil):
        return "0"
    if isinstance(t, Seq):
        return f"{show(t.action)}; {show(t.cont)}"
    if isinstance(t, Choice):
        return f"choice{{{show(t.left)}}}{{{show(t.right)}}}"
    if isinstance(t, Repl):
        count = f"[{t.spawned}]" if t.spawned else ""
        return f"repl{count}{{{show(t.body)}}}"
    raise TypeError(f"not a term: {t!r}")


def show_rate(p: Fraction) -> str:
    p = Fraction(p)
    if p.denominator == 1:
        return str(p.numerator)
    den = p.denominator
    while den % 2 == 0:
        den //= 2
    while den % 5 == 0:
        den //= 5
    if den != 1:
        return f"{p.numerator}/{p.denominator}"
    text = f"{float(p):.12f}".rstrip("0")
    return text + "0" if text.endswith(".") else text


def show_label(lab: Label) -> str:
    if isinstance(lab, Silent):
        return "tau"
    if isinstance(lab, Chan):
        return show(lab.channel)
    if isinstance(lab, ChanMsg):
        return f"{show(lab.channel)}.{show(lab.content)}"
    if isinstance(lab, Classical):
        return f"{show(lab.channel)}.{show(lab.payload)}"
    if isinstance(lab, Rated):
        return f"{show_rate(lab.rate)}({lab.src},{lab.dst})"
    raise TypeError(lab)


def label_key(lab: Label) -> tuple:
    if isinstance(lab, Silent):
        return (0,)
    if isinstance(lab, Chan):
        return (1, term_key(lab.channel))
    if isinstance(lab, ChanMsg):
        return (2, term_key(lab.channel), term_key(lab.content))
    if isinstance(lab, Classical):
        return (3, term_key(lab.channel), term_key(lab.payload))
    return (4, lab.src, lab.dst, lab.rate)


def erase_locations(c: Configuration) -> Configuration:
    """The plain configuration underlying a located one."""
    return canonical(Configuration(tuple(Membrane(m.molecules) for m in c.membranes)))


def show_membrane(m: Membrane) -> str:
    body = ", ".join(show(x) for x in m.molecules) or "empty"
    loc = f"@{m.location}" if m.location is not None else ""
    return f"[[{body}]]{loc}"


def show_config(c: Configuration) -> str:
    return " || ".join(show_membrane(m) for m in c.membranes) or "(empty)"

"""ComplEx knowledge-base completion and abductive theorem proving."""

from ._core import (
    RELATIONS,
    ArgumentError,
    FormatError,
    FormulaSyntaxError,
    KbcScorer,
    Model,
    RemoteScorer,
    RemoteScorerError,
    Scorer,
    ScoringServer,
    SearchScorer,
    TrainingError,
    TripletScorer,
    UnsupportedFragment,
    compile_axiom,
    generate_axioms,
    parse_formula,
    prove,
    prove_file,
    train,
    transitive_closure,
)

__all__ = [
    "RELATIONS",
    "ArgumentError",
    "FormatError",
    "FormulaSyntaxError",
    "KbcScorer",
    "Model",
    "RemoteScorer",
    "RemoteScorerError",
    "Scorer",
    "ScoringServer",
    "SearchScorer",
    "TrainingError",
    "TripletScorer",
    "UnsupportedFragment",
    "compile_axiom",
    "generate_axioms",
    "parse_formula",
    "prove",
    "prove_file",
    "train",
    "transitive_closure",
]

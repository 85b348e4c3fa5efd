"""Natural-language planning instructions to LTL, with automaton-backed
validation, self-consistency voting, and a grid-world planning demo."""

from .automata import (
    BuchiAutomaton,
    EmptinessResult,
    Label,
    ResourceLimitError,
    SatResult,
    build_automaton,
    dump,
    equiv,
    is_empty,
    is_satisfiable,
)
from .evaluation import (
    Dataset,
    DatasetRecord,
    DatasetSchemaError,
    EvalReport,
    dataset_stats,
    evaluate_dataset,
    ground_formula,
    load_dataset,
)
from .formulas import (
    And,
    Atom,
    Finally,
    Formula,
    Globally,
    LassoWord,
    Not,
    Or,
    Release,
    Until,
    atoms,
    evaluate,
    to_nnf,
)
from .gateway import (
    AuthenticationError,
    Completion,
    GatewayError,
    GenerationConfig,
    HttpBackend,
    MockBackend,
    NetworkError,
    ProviderError,
    RecordingBackend,
    ReplayBackend,
    ReplayMissError,
    ReplayStore,
)
from .parsing import (
    InternalOperatorError,
    ParseError,
    UnknownOperatorError,
    parse,
    print_formula,
)
from .pipeline import (
    AllRunsFailedError,
    NoMajorityError,
    PipelineConfig,
    TranslationResult,
    TranslationRun,
    translate,
    vote,
)
from .planner import (
    GridWorld,
    NoPlanError,
    Trajectory,
    UnsatisfiableFormulaError,
    WorldFormatError,
    builtin_world,
    check_trace,
    load_world,
    parse_world,
    plan,
    render_path,
)
from .prompts import (
    CoTExample,
    ExtractionError,
    PromptBundle,
    PromptHeader,
    PromptValidationError,
    builtin_prompt_set,
    extract_formula,
    load_prompt_set,
    render,
    render_reprompt,
    validate_bundle,
)
from .srl import (
    LexiconError,
    Role,
    RoleLexicon,
    RoleSpan,
    default_lexicon,
    load_lexicon,
    render_annotation,
    tag,
)

__version__ = "0.1.0"

__all__ = [
    "AllRunsFailedError",
    "And",
    "Atom",
    "AuthenticationError",
    "BuchiAutomaton",
    "CoTExample",
    "Completion",
    "Dataset",
    "DatasetRecord",
    "DatasetSchemaError",
    "EmptinessResult",
    "EvalReport",
    "ExtractionError",
    "Finally",
    "Formula",
    "GatewayError",
    "GenerationConfig",
    "Globally",
    "GridWorld",
    "HttpBackend",
    "InternalOperatorError",
    "Label",
    "LassoWord",
    "LexiconError",
    "MockBackend",
    "NetworkError",
    "NoMajorityError",
    "NoPlanError",
    "Not",
    "Or",
    "ParseError",
    "PipelineConfig",
    "PromptBundle",
    "PromptHeader",
    "PromptValidationError",
    "ProviderError",
    "RecordingBackend",
    "Release",
    "ReplayBackend",
    "ReplayMissError",
    "ReplayStore",
    "ResourceLimitError",
    "Role",
    "RoleLexicon",
    "RoleSpan",
    "SatResult",
    "Trajectory",
    "TranslationResult",
    "TranslationRun",
    "UnknownOperatorError",
    "UnsatisfiableFormulaError",
    "Until",
    "WorldFormatError",
    "atoms",
    "build_automaton",
    "builtin_prompt_set",
    "builtin_world",
    "check_trace",
    "dataset_stats",
    "default_lexicon",
    "dump",
    "equiv",
    "evaluate",
    "evaluate_dataset",
    "extract_formula",
    "ground_formula",
    "is_empty",
    "is_satisfiable",
    "load_dataset",
    "load_lexicon",
    "load_prompt_set",
    "load_world",
    "parse",
    "parse_world",
    "plan",
    "print_formula",
    "render",
    "render_annotation",
    "render_path",
    "render_reprompt",
    "tag",
    "to_nnf",
    "translate",
    "validate_bundle",
    "vote",
    "__version__",
]

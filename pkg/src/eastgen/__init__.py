"""Induce entity-aware syntax trees from annotated corpora and use them to
generate labeled synthetic training sentences for intent detection and
slot filling, with a regex-export baseline and support for hand-authored
trees."""

__version__ = "0.1.0"

from .builder import (
    BuilderConfig,
    build,
    detect_exchangeable,
    determine_main_entities,
    entity_occurrence,
    finalize_weights,
    grow,
    skeleton,
)
from .corpus import (
    AnnotatedSentence,
    Dataset,
    EntityLexicon,
    Literal,
    Placeholder,
    SentenceTemplate,
    abstract_entities,
    build_dataset,
    parse_conll,
    parse_records,
)
from .east import (
    East,
    Node,
    TemplateLanguage,
    deserialize,
    entity,
    enumerate_language,
    exchangeable,
    expand_templates,
    fixed,
    order,
    pick_one,
    serialize,
    validate,
)
from .embeddings import EmbeddingTable, cosine_similarity, k_nearest, load_embeddings
from .errors import EastgenError
from .generator import (
    GeneratedSentence,
    GenerationConfig,
    GenerationStats,
    emit,
    generate_batch,
    generate_one,
)
from .regex_export import RegexBundle, export_regex, match

__all__ = [
    "AnnotatedSentence",
    "BuilderConfig",
    "Dataset",
    "East",
    "EastgenError",
    "EmbeddingTable",
    "EntityLexicon",
    "GeneratedSentence",
    "GenerationConfig",
    "GenerationStats",
    "Literal",
    "Node",
    "Placeholder",
    "RegexBundle",
    "SentenceTemplate",
    "TemplateLanguage",
    "abstract_entities",
    "build",
    "build_dataset",
    "cosine_similarity",
    "deserialize",
    "detect_exchangeable",
    "determine_main_entities",
    "emit",
    "entity",
    "entity_occurrence",
    "enumerate_language",
    "exchangeable",
    "expand_templates",
    "export_regex",
    "finalize_weights",
    "fixed",
    "generate_batch",
    "generate_one",
    "grow",
    "k_nearest",
    "load_embeddings",
    "match",
    "order",
    "parse_conll",
    "parse_records",
    "pick_one",
    "serialize",
    "skeleton",
    "validate",
]

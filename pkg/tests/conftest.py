import pytest

from pgmhd import IngestConfig, Model, ModelSchema, Observation, train_sharded

# The worked five-user example: (user, class, terms). Expanding the
# terms gives 19 (class, term) observations over 4 classes and 15
# distinct terms, with 17 distinct class->term arcs; "Java" and
# "Software Engineer" are each searched by two Java Developer users.
FIVE_USERS = [
    ("user1", "Java Developer", ("Java", "Java Developer", "C", "Software Engineer")),
    ("user2", "Nurse", ("RN", "Rigistered Nurse", "Health Care")),
    ("user3", ".NET Developer", ("C#", "ASP", "VB", "Software Engineer", "SE")),
    ("user4", "Java Developer", ("Java", "JEE", "Struts", "Software Engineer", "SE")),
    ("user5", "Health Care", ("Health Care Rep", "HealthCare")),
]

FIVE_USERS_PAIRS = [
    (classification, term)
    for _, classification, terms in FIVE_USERS
    for term in terms
]


def userlog_lines(rows=FIVE_USERS) -> str:
    return "".join(
        f"{user}\t{classification}\t{', '.join(terms)}\n"
        for user, classification, terms in rows
    )


@pytest.fixture
def userlog_file(tmp_path):
    path = tmp_path / "userlog.tsv"
    path.write_text(userlog_lines(), encoding="utf-8")
    return str(path)


@pytest.fixture
def pairs_model() -> Model:
    """The five-user pairs ingested as plain paths (no user identity)."""
    model = Model(ModelSchema(("class", "term")))
    for classification, term in FIVE_USERS_PAIRS:
        model.ingest(Observation((classification, term)))
    return model


@pytest.fixture
def userlog_model(userlog_file) -> Model:
    """The five users trained through the user-log pipeline: root arcs
    carry distinct-user counts."""
    config = IngestConfig(mode="userlog", min_distinct_users=0)
    return train_sharded(userlog_file, config, ModelSchema(("class", "term")))

from forge.exceptions import (
    ConfigValidationError,
    DatasetError,
    ForgeError,
    ParseError,
    ParseErrorKind,
    TrainingDivergedError,
)


def test_render_without_context():
    assert DatasetError("no rows").render() == "DatasetError: no rows"


def test_render_with_context():
    err = DatasetError("missing column 'label'", {"file": "a.csv", "line": 3})
    assert err.render() == "DatasetError: missing column 'label' [file=a.csv line=3]"


def test_parse_error_fields():
    err = ParseError(ParseErrorKind.UNKNOWN_SYMBOL, 4)
    assert isinstance(err, ForgeError)
    assert err.kind == ParseErrorKind.UNKNOWN_SYMBOL
    assert err.position == 4
    assert err.context == {"kind": "UnknownSymbol", "position": 4}
    assert repr(err) == "ParseError(kind=UnknownSymbol, position=4)"


def test_parse_error_context_can_grow():
    err = ParseError(ParseErrorKind.EMPTY_INPUT, 0)
    err.context.update({"file": "x.csv", "row": 7})
    assert err.render().endswith("[kind=EmptyInput position=0 file=x.csv row=7]")


def test_config_error_keeps_pydantic_errors():
    err = ConfigValidationError("pooling.dim: too small", errors=[{"loc": ("pooling", "dim")}])
    assert err.errors[0]["loc"] == ("pooling", "dim")
    assert ConfigValidationError("bad").errors == []


def test_training_diverged_error():
    err = TrainingDivergedError(3, float("nan"))
    assert err.epoch == 3
    assert "epoch=3" in err.render()

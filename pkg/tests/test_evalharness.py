import json
from fractions import Fraction
from pathlib import Path

import httpx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hrvis.errors import (
    IncompleteCoverage,
    MissingItem,
    TransportError,
    UnknownLabel,
    UnparseableResponse,
    WrongItemSet,
)
from hrvis.evalharness import (
    LIKERT_LABELS,
    NA_LABEL,
    EndpointClient,
    EndpointConfig,
    administer,
    administer_all,
    build_prompt,
    likert_label,
    likert_value,
    load_fixture,
    parse_labels,
    pearson,
    personas,
    printed_tables,
    round_half_away,
    scales,
    score_beauvis,
    score_previs,
    verify_tables,
)
from hrvis.evalharness.administer import MAX_PARSE_ATTEMPTS, ScaleResponse

FIXTURE = Path(__file__).resolve().parents[1] / "fixtures" / "appendixD.json"
BV = scales()["beauvis"]
PV = scales()["previs"]
SARAH = personas()["sarah_chen"]
A, SLA, SLD, D, N, SA, SD = "Agree", "Slightly agree", "Slightly disagree", "Disagree", "Neutral", "Strongly agree", "Strongly disagree"


def bv(*labels):
    return dict(zip(BV.codes, labels))


def pv(values):
    return {c: (NA_LABEL if v is None else likert_label(v)) for c, v in zip(PV.codes, values)}


# ---------------------------------------------------------------- Likert coding


def test_likert_values():
    assert likert_value("Neutral") == 4
    assert likert_value("Strongly agree") == 7
    assert likert_value("strongly  DISAGREE ") == 1
    assert likert_value("I don't know/Not applicable") is None
    with pytest.raises(UnknownLabel):
        likert_value("Somewhat agree")


@given(st.integers(1, 7))
def test_likert_bijection(v):
    assert likert_value(likert_label(v)) == v


# ---------------------------------------------------------------- scoring


def test_beauvis_examples():
    assert score_beauvis(bv(A, A, SLA, A, A)) == 5.8
    assert score_beauvis(bv(SD, SD, SD, SD, SD)) == 1.0
    assert score_beauvis(bv(SLD, D, D, SLD, D)) == 2.4
    assert score_beauvis(bv(NA_LABEL, A, NA_LABEL, A, SA)) == round_half_away(Fraction(19, 3))
    assert score_beauvis(bv(*[NA_LABEL] * 5)) is None


def test_beauvis_wrong_items():
    with pytest.raises(WrongItemSet):
        score_beauvis({"BV1": A})
    with pytest.raises(WrongItemSet):
        score_beauvis({**bv(A, A, A, A, A), "PV1": A})


def test_previs_examples():
    s = score_previs(pv([7] * 11))
    assert [v.value for v in s.values()] == [7.0, 7.0, 7.0, 7.0]
    s = score_previs(pv([6, 6, 5, 4, 4, 4, 4, 4, 4, 3, None]))
    assert s["Understand"].value == 5.7 and not s["Understand"].na_flag
    assert s["DataFeat"].value == 3.0 and s["DataFeat"].na_flag
    assert s["DataFeat"].display() == "3.0*"


def test_rounding_half_away():
    assert round_half_away(Fraction(45, 10)) == 4.5
    assert round_half_away(Fraction(1, 20)) == 0.1
    assert round_half_away(Fraction(-1, 20)) == -0.1
    assert round_half_away(Fraction(5, 2), 0) == 3.0
    # 4.25 is exact in binary, so this distinguishes half-away from banker's rounding
    assert round_half_away(Fraction(17, 4)) == 4.3


answers_st = st.lists(st.sampled_from(LIKERT_LABELS + (NA_LABEL,)), min_size=11, max_size=11)


@given(answers_st, st.randoms())
def test_scoring_permutation_invariant(labels, rnd):
    a = score_previs(dict(zip(PV.codes, labels)))
    for codes in PV.subscales.values():
        block = [labels[PV.codes.index(c)] for c in codes]
        rnd.shuffle(block)
        for c, l in zip(codes, block):
            labels[PV.codes.index(c)] = l
    assert score_previs(dict(zip(PV.codes, labels))) == a


@given(answers_st)
def test_subscale_na_iff_all_na(labels):
    scores = score_previs(dict(zip(PV.codes, labels)))
    for name, codes in PV.subscales.items():
        all_na = all(labels[PV.codes.index(c)] == NA_LABEL for c in codes)
        assert (scores[name].value is None) == all_na
        if scores[name].value is not None:
            assert 1.0 <= scores[name].value <= 7.0


def test_all_strongly_disagree_gives_ones():
    assert all(v.value == 1.0 for v in score_previs(pv([1] * 11)).values())


def test_instruments_structure():
    for scale in (BV, PV):
        assert len(set(scale.codes)) == len(scale.codes)
        parts = [c for codes in scale.subscales.values() for c in codes]
        assert sorted(parts) == sorted(scale.codes)
    assert len(BV.codes) == 5 and len(PV.codes) == 11
    assert [p.vlat_level for p in personas().values()] == ["high", "moderate_high", "moderate", "low"]
    assert [p.name for p in personas().values()] == ["Sarah Chen", "Marcus Thompson", "Linda Rodriguez", "Robert Kim"]


# ---------------------------------------------------------------- prompt and parsing


def test_prompt_contents():
    prompt = build_prompt(SARAH, BV)
    assert "Sarah Chen" in prompt
    for code, text in BV.items:
        assert f"{code}: {text}" in prompt
    assert "JSON" in prompt


def test_parse_labels_variants():
    labels = bv(A, A, SLA, A, A)
    wrapped = "Sure! Here you go:\n```json\n" + json.dumps(labels) + "\n```"
    assert parse_labels(wrapped, BV) == labels
    assert parse_labels(json.dumps({k: v.lower() for k, v in labels.items()}), BV) == labels
    with pytest.raises(UnparseableResponse):
        parse_labels("I find this chart lovely.", BV)
    with pytest.raises(MissingItem):
        parse_labels(json.dumps({"BV1": A}), BV)
    with pytest.raises(UnparseableResponse):
        parse_labels(json.dumps({**labels, "BV2": "Meh"}), BV)


# ---------------------------------------------------------------- transport


class Recorder:
    def __init__(self, replies):
        self.replies = list(replies)
        self.requests = []

    def __call__(self, request):
        self.requests.append(request)
        status, body = self.replies.pop(0)
        if isinstance(body, Exception):
            raise body
        return httpx.Response(status, json=body)


def make_client(replies, **cfg):
    rec = Recorder(replies)
    sleeps = []
    config = EndpointConfig(url="http://eval.invalid/v1", token="tok", model="m1", **cfg)
    client = EndpointClient(config, httpx.Client(transport=httpx.MockTransport(rec)), sleeps.append)
    return client, rec, sleeps


@pytest.fixture
def image(tmp_path):
    p = tmp_path / "heatmap.svg"
    p.write_text("<svg/>")
    return p


def test_request_contract(image):
    labels = bv(A, A, SLA, A, A)
    client, rec, sleeps = make_client([(200, {"text": json.dumps(labels)})])
    r = administer(image, SARAH, BV, client)
    assert r.aggregates["BeauVis"].value == 5.8 and r.visualization == "heatmap"
    assert r.transport["mode"] == "endpoint" and r.transport["attempts"] == 1 and r.transport["model"] == "m1"
    req = rec.requests[0]
    body = json.loads(req.content)
    assert set(body) == {"model", "prompt", "image_base64", "max_tokens"}
    assert body["image_base64"] == "PHN2Zy8+"
    assert req.headers["authorization"] == "Bearer tok"
    assert sleeps == []


def test_backoff_on_transport_errors(image):
    labels = bv(A, A, A, A, A)
    replies = [(503, {}), (429, {}), (0, httpx.ConnectError("down")), (500, {}), (200, {"text": json.dumps(labels)})]
    client, rec, sleeps = make_client(replies)
    assert administer(image, SARAH, BV, client).aggregates["BeauVis"].value == 6.0
    assert sleeps == [1.0, 2.0, 4.0, 8.0]


def test_gives_up_after_five_tries(image):
    client, rec, sleeps = make_client([(502, {})] * 5)
    with pytest.raises(TransportError):
        administer(image, SARAH, BV, client)
    assert len(rec.requests) == 5 and sleeps == [1.0, 2.0, 4.0, 8.0]


def test_client_error_not_retried(image):
    client, rec, sleeps = make_client([(401, {"error": "nope"})])
    with pytest.raises(TransportError):
        administer(image, SARAH, BV, client)
    assert len(rec.requests) == 1 and sleeps == []


def test_repair_then_success(image):
    labels = bv(D, D, D, D, D)
    client, rec, _ = make_client([(200, {"text": "It looks nice."}), (200, {"text": json.dumps(labels)})])
    r = administer(image, SARAH, BV, client)
    assert r.transport["attempts"] == 2 and r.aggregates["BeauVis"].value == 2.0
    assert "could not be parsed" in json.loads(rec.requests[1].content)["prompt"]


def test_prose_every_time_is_unparseable(image):
    client, rec, _ = make_client([(200, {"text": "Lovely colours."})] * MAX_PARSE_ATTEMPTS)
    with pytest.raises(UnparseableResponse) as err:
        administer(image, SARAH, BV, client)
    assert err.value.raw == "Lovely colours."
    assert len(rec.requests) == MAX_PARSE_ATTEMPTS


def test_missing_item_after_retries(image):
    client, _, _ = make_client([(200, {"text": '{"BV1": "Agree"}'})] * MAX_PARSE_ATTEMPTS)
    with pytest.raises(MissingItem):
        administer(image, SARAH, BV, client)


def test_env_config():
    with pytest.raises(TransportError):
        EndpointConfig.from_env({})
    cfg = EndpointConfig.from_env({"EVAL_ENDPOINT": "http://x", "EVAL_TOKEN": "t", "EVAL_MODEL": "mm"})
    assert (cfg.url, cfg.token, cfg.model) == ("http://x", "t", "mm")


def test_administer_all_keeps_job_order(tmp_path):
    import base64

    vis_names = ("heatmap", "recurrence", "spectrogram", "poincare")
    jobs = []
    for k, vis in enumerate(vis_names):
        img = tmp_path / f"{vis}.svg"
        img.write_text(str(k + 1))
        jobs.append((img, SARAH, BV, vis))

    def reply(request):
        # the answer encodes which image was attached, so order mix-ups show
        k = int(base64.b64decode(json.loads(request.content)["image_base64"]))
        return httpx.Response(200, json={"text": json.dumps(bv(*[likert_label(k)] * 5))})

    client = EndpointClient(
        EndpointConfig(url="http://eval.invalid"), httpx.Client(transport=httpx.MockTransport(reply)), lambda s: None
    )
    out = administer_all(jobs, client)
    assert [r.visualization for r in out] == list(vis_names)
    assert [r.aggregates["BeauVis"].value for r in out] == [1.0, 2.0, 3.0, 4.0]


# ---------------------------------------------------------------- fixtures and verification


def fixture_responses():
    fx = load_fixture(FIXTURE)
    jobs = [(None, personas()[p], scales()[s], v) for (p, v, s) in fx]
    return administer_all(jobs, fixture=fx)


def test_offline_never_uses_network(monkeypatch):
    def boom(*a, **k):
        raise AssertionError("network used")

    monkeypatch.setattr(httpx.Client, "send", boom)
    responses = fixture_responses()
    assert len(responses) == 20
    assert all(r.transport == {"mode": "offline"} for r in responses)
    sarah = next(r for r in responses if r.persona == "sarah_chen" and r.visualization == "heatmap")
    assert sarah.aggregates["BeauVis"].value == 5.8


def test_fixture_matches_bundled_labels():
    fx = load_fixture(FIXTURE)
    for row in printed_tables()["beauvis"]:
        assert fx[(row["persona"], row["visualization"], "beauvis")] == row["labels"]


def test_verify_reports_cells():
    report = verify_tables(fixture_responses())
    assert len(report.cells) == 20
    cells = {(c.persona, c.visualization): c for c in report.cells}
    marcus = cells[("marcus_thompson", "heatmap")]
    assert (marcus.computed, marcus.printed, marcus.status) == (4.6, 4.4, "MISMATCH")
    sarah = cells[("sarah_chen", "heatmap")]
    assert (sarah.computed, sarah.printed, sarah.status) == (5.8, 5.8, "MATCH")
    for key, comp, prin in [
        (("sarah_chen", "recurrence"), 4.4, 4.2),
        (("robert_kim", "heatmap"), 1.2, 1.4),
    ]:
        assert (cells[key].computed, cells[key].printed, cells[key].status) == (comp, prin, "MISMATCH")
    # every mismatch is a genuine arithmetic disagreement with the printed labels
    for c in report.mismatches:
        labels = printed_tables()["beauvis"]
        row = next(r for r in labels if (r["persona"], r["visualization"]) == (c.persona, c.visualization))
        values = [likert_value(l) for l in row["labels"].values()]
        assert round_half_away(Fraction(sum(values), len(values))) != row["printed_score"]
    assert report.grand_means["sarah_chen"]["printed"] == 4.96
    assert report.grand_means["robert_kim"]["printed"] == 1.32
    assert report.correlation_n == 20 and -1 <= report.correlation <= 1


def test_report_formats():
    report = verify_tables(fixture_responses())
    js = json.loads(report.dumps())
    assert js["summary"]["cells"] == 20
    assert js["summary"]["match"] + js["summary"]["mismatch"] == 20
    assert js["correlation"]["variant"].startswith("BeauVis")
    md = report.to_markdown()
    assert "| Marcus Thompson | heatmap | beauvis | BeauVis | 4.6 | 4.4 | MISMATCH |" in md


def test_verify_recomputes_from_labels():
    responses = fixture_responses()
    target = next(r for r in responses if (r.persona, r.visualization) == ("sarah_chen", "heatmap"))
    # a stale stored aggregate must not leak into the report
    target.aggregates = {"BeauVis": type(target.aggregates["BeauVis"])(1.0, False)}
    cell = next(c for c in verify_tables(responses).cells if (c.persona, c.visualization) == ("sarah_chen", "heatmap"))
    assert cell.computed == 5.8


def test_verify_coverage():
    with pytest.raises(IncompleteCoverage):
        verify_tables([])
    with pytest.raises(IncompleteCoverage):
        verify_tables(fixture_responses()[:-1])


def test_response_roundtrip():
    r = fixture_responses()[3]
    back = ScaleResponse.from_json(json.loads(json.dumps(r.to_json())), BV)
    assert back.labels() == r.labels() and back.aggregates == r.aggregates


def test_pearson():
    xs = [1.0, 2.5, 3.0, 7.0]
    assert pearson(xs, xs) == pytest.approx(1.0)
    assert pearson(xs, [-x for x in xs]) == pytest.approx(-1.0)

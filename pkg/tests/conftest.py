import json
from pathlib import Path

import pytest

from policygraph.pipeline import Engine, EngineConfig
from policygraph.store import CorpusStore, SourceSpec

WISCONSIN_TEXT = """\
FORESTRY GRANT PROGRAM
NR 47.10 The purpose of this subchapter is to establish procedures and \
standards for the administration of the stewardship incentive program (SIP) \
as authorized under the act, for the purpose of encouraging private forest \
land-owners to manage their lands in a manner that benefits all the \
resources in their forest. Direct payments shall be awarded to landowners \
who complete approved reforestation practices on forest land. The program \
supports restoration of degraded forest areas in Wisconsin.
"""

LEY_TEXT = """\
LEY DE RESTAURACIÓN FORESTAL
Artículo 1. Se entiende por restauración la recuperación de los ecosistemas \
forestales degradados.
Artículo 2. El programa Sembrando Vida otorgará pagos directos a los \
agricultores que planten árboles en sus tierras para la reforestación.
Artículo 3. Las multas por incendios forestales se aplicarán conforme a esta ley.
"""

TELECOM_HTML = """\
<html><head><title>Spectrum Notice</title></head><body>
<p>This notice concerns telecommunications spectrum allocation.</p>
<p>Licensees must comply with the published schedule of fees.</p>
</body></html>
"""

KEYWORDS_EN = """\
env-en en 1.0 1.0
IN:
forest
reforestation
restoration
landowners
OUT:
telecommunications
spectrum
"""

KEYWORDS_ES = """\
env-es es 1.0 1.0
IN:
restauracion
reforestacion
bosque
forestal
OUT:
telecomunicaciones
"""

QUERIES = """\
tax_benefits en
Grants tax deductions to those who conserve or rehabilitate forest land.\tPeru

direct_payments en
Awards direct payments to small landowners who manage forests and plantations.\tGuatemala

direct_payments es
Otorgará pagos directos a los agricultores que planten árboles.\tMéxico

fines en
Punishes those who start forest fires with monetary fines.\tChile

fines es
Las multas por incendios forestales se aplicarán conforme a la ley.

loans en
Promotes reforestation by making loans to cover landowners' costs.\tUSA

supplies en
Provides tools, supplies, and plants and establishes community nurseries.\tMéxico

technical_assistance en
Provides farmers with access to training centers to learn about agroforestry.\tIndia

forest en
The program supports restoration of degraded forest areas and forest management.

forest es
La restauración de los ecosistemas forestales y el manejo del bosque.

agriculture en
Farmers plant crops and manage agricultural land under this program.
"""

GAZETTEER = (
    "program\tStewardship Incentive Program (SIP)\tstewardship incentive program\n"
    "program\tSembrando Vida\n"
    "target_group\tprivate forest land-owners\n"
    "government_agency\tDepartment of Natural Resources\n"
    "location\tWisconsin\n"
)


def build_fixture_corpus(root: Path) -> Path:
    """Three-document fixture source: one HTML, two txt, one Spanish."""
    docs = root / "docs"
    docs.mkdir(parents=True, exist_ok=True)
    (docs / "wisconsin.txt").write_text(WISCONSIN_TEXT, encoding="utf-8")
    (docs / "wisconsin.txt.meta.json").write_text(json.dumps({
        "title": "Wisconsin Forestry Grant and State Aid Administration",
        "language": "en",
        "issuing_body": "Department of Natural Resources",
    }), encoding="utf-8")
    (docs / "ley_restauracion.txt").write_text(LEY_TEXT, encoding="utf-8")
    (docs / "ley_restauracion.txt.meta.json").write_text(json.dumps({
        "title": "Ley de Restauración Forestal",
        "language": "es",
        "issuing_body": "Secretaría de Medio Ambiente",
    }), encoding="utf-8")
    (docs / "telecom.html").write_text(TELECOM_HTML, encoding="utf-8")
    (docs / "telecom.html.meta.json").write_text(json.dumps({
        "title": "Telecommunications Spectrum Notice",
        "language": "en",
    }), encoding="utf-8")
    return docs


def build_engine(tmp_path: Path, *, with_source: bool = True) -> Engine:
    kw_en = tmp_path / "keywords_en.txt"
    kw_en.write_text(KEYWORDS_EN, encoding="utf-8")
    kw_es = tmp_path / "keywords_es.txt"
    kw_es.write_text(KEYWORDS_ES, encoding="utf-8")
    queries = tmp_path / "queries.txt"
    queries.write_text(QUERIES, encoding="utf-8")
    gazetteer = tmp_path / "gazetteer.tsv"
    gazetteer.write_text(GAZETTEER, encoding="utf-8")

    engine = Engine(EngineConfig(
        store_path=tmp_path / "store",
        keyword_files=[kw_en, kw_es],
        query_file=queries,
        gazetteer_file=gazetteer,
    ))
    if with_source:
        docs = build_fixture_corpus(tmp_path)
        engine.store.add_source(SourceSpec(
            source_id="fixture", country="US", level="state", region="Wisconsin",
            base_locator=str(docs), fetch_interval=60.0, format_hint="txt",
        ))
    return engine


@pytest.fixture
def store(tmp_path) -> CorpusStore:
    return CorpusStore(tmp_path / "store")


@pytest.fixture
def engine(tmp_path) -> Engine:
    return build_engine(tmp_path)


@pytest.fixture
def ran_engine(tmp_path) -> Engine:
    eng = build_engine(tmp_path)
    eng.run_pipeline()
    return eng

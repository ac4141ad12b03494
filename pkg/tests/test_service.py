import json
import threading

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from weedlab.pipeline import auto_annotate
from weedlab.service import MANIFEST_NAME, ReviewStore, create_app
from weedlab.taxonomy import build_default_taxonomy
from weedlab.voc import read_voc_xml, write_voc_xml

BROWN = (160, 82, 45)
GREEN = (0, 255, 0)


@pytest.fixture(scope="module")
def tax():
    return build_default_taxonomy()


@pytest.fixture()
def dataset(tmp_path, tax):
    label = tax.label("AMBEL", 8)
    for i in range(3):
        img = np.zeros((60, 80, 3), dtype=np.uint8)
        img[:, :] = BROWN
        img[10 + i : 40, 15 : 50 + i] = GREEN
        stem = f"img_{i}"
        Image.fromarray(img).save(tmp_path / f"{stem}.png")
        ann = auto_annotate(img, label, image_id=stem)
        (tmp_path / f"{stem}.xml").write_bytes(write_voc_xml(ann))
    return tmp_path


@pytest.fixture()
def client(dataset, tax):
    app = create_app(dataset, tax)
    with TestClient(app) as c:
        yield c


def test_list_images(client):
    payload = client.get("/api/images").json()
    assert payload["total"] == 3
    assert [item["image_id"] for item in payload["items"]] == ["img_0", "img_1", "img_2"]
    assert all(item["reviewed"] is False for item in payload["items"])
    assert all(item["box_count"] == 1 for item in payload["items"])


def test_list_images_pagination(client):
    payload = client.get("/api/images", params={"offset": 2, "limit": 2}).json()
    assert payload["total"] == 3
    assert [item["image_id"] for item in payload["items"]] == ["img_2"]


def test_list_images_empty(tmp_path, tax):
    with TestClient(create_app(tmp_path, tax)) as c:
        payload = c.get("/api/images").json()
    assert payload == {"total": 0, "offset": 0, "limit": 50, "items": []}


def test_get_annotation_matches_file(client, dataset, tax):
    record = client.get("/api/annotations/img_0").json()
    ann = read_voc_xml((dataset / "img_0.xml").read_bytes(), tax)
    assert record["width"] == ann.width and record["height"] == ann.height
    assert record["revision"] == 0
    box = record["boxes"][0]
    obj = ann.objects[0]
    # wire format is 0-based, like the in-memory boxes
    assert (box["xmin"], box["ymin"], box["xmax"], box["ymax"]) == (
        obj.box.xmin, obj.box.ymin, obj.box.xmax, obj.box.ymax,
    )
    assert box["label"] == "AMBEL_week_8"


def test_get_annotation_unknown_id(client):
    response = client.get("/api/annotations/nope")
    assert response.status_code == 404
    assert response.json()["detail"]["error"] == "not_found"


def test_get_image_bytes_and_head(client, dataset):
    response = client.get("/api/images/img_1")
    assert response.status_code == 200
    assert response.headers["content-type"] == "image/png"
    assert response.content == (dataset / "img_1.png").read_bytes()
    head = client.head("/api/images/img_1")
    assert head.status_code == 200
    assert head.content == b""
    assert client.get("/api/images/ghost").status_code == 404


def test_put_moves_box_and_bumps_revision(client, dataset, tax):
    record = client.get("/api/annotations/img_0").json()
    box = dict(record["boxes"][0])
    box["xmin"] += 5
    box["xmax"] += 5
    response = client.put(
        "/api/annotations/img_0",
        json={"expected_revision": record["revision"], "boxes": [box]},
    )
    assert response.status_code == 200, response.text
    updated = response.json()
    assert updated["revision"] == record["revision"] + 1
    assert updated["boxes"][0]["xmin"] == box["xmin"]

    # a fresh GET and the on-disk XML both reflect the edit
    again = client.get("/api/annotations/img_0").json()
    assert again == updated
    ann = read_voc_xml((dataset / "img_0.xml").read_bytes(), tax)
    assert ann.objects[0].box.xmin == box["xmin"]


def test_put_validation_failure_leaves_file_untouched(client, dataset):
    before = (dataset / "img_0.xml").read_bytes()
    record = client.get("/api/annotations/img_0").json()
    bad = dict(record["boxes"][0])
    bad["xmax"] = record["width"] + 10
    response = client.put(
        "/api/annotations/img_0",
        json={"expected_revision": record["revision"], "boxes": [bad]},
    )
    assert response.status_code == 400
    assert response.json()["detail"]["error"] == "validation_failed"
    assert (dataset / "img_0.xml").read_bytes() == before

    bad_label = dict(record["boxes"][0])
    bad_label["label"] = "XXXXX_week_1"
    response = client.put(
        "/api/annotations/img_0",
        json={"expected_revision": record["revision"], "boxes": [bad_label]},
    )
    assert response.status_code == 400
    assert (dataset / "img_0.xml").read_bytes() == before


def test_put_stale_revision_conflicts(client):
    record = client.get("/api/annotations/img_1").json()
    payload = {"expected_revision": record["revision"], "boxes": record["boxes"]}
    assert client.put("/api/annotations/img_1", json=payload).status_code == 200
    # same expected revision again: stale
    response = client.put("/api/annotations/img_1", json=payload)
    assert response.status_code == 409
    detail = response.json()["detail"]
    assert detail["error"] == "revision_conflict"
    assert detail["current_revision"] == record["revision"] + 1


def test_concurrent_puts_one_winner(dataset, tax):
    store = ReviewStore(dataset, tax)
    record = store.get_record("img_2")
    from weedlab.service import BoxModel, StaleRevision

    results = []

    def writer(dx):
        boxes = [BoxModel(**{**record["boxes"][0], "xmin": record["boxes"][0]["xmin"] + dx})]
        try:
            store.put_record("img_2", boxes, expected_revision=record["revision"])
            results.append("ok")
        except StaleRevision:
            results.append("conflict")

    threads = [threading.Thread(target=writer, args=(dx,)) for dx in (1, 2, 3, 4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(results) == ["conflict", "conflict", "conflict", "ok"]
    assert store.get_record("img_2")["revision"] == record["revision"] + 1


def test_reviewed_flag_persists_and_is_idempotent(client, dataset):
    response = client.post("/api/annotations/img_0/reviewed", json={"reviewed": True})
    assert response.status_code == 200
    first = response.json()
    assert first["reviewed"] is True
    # idempotent: revision untouched
    second = client.post("/api/annotations/img_0/reviewed", json={"reviewed": True}).json()
    assert second["revision"] == first["revision"]

    listed = client.get("/api/images").json()["items"]
    assert [i["reviewed"] for i in listed] == [True, False, False]

    manifest = json.loads((dataset / MANIFEST_NAME).read_text())
    assert manifest["records"]["img_0"]["reviewed"] is True


def test_flags_survive_restart(dataset, tax):
    with TestClient(create_app(dataset, tax)) as c:
        c.post("/api/annotations/img_1/reviewed", json={"reviewed": True})
        record = c.get("/api/annotations/img_1").json()
        c.put(
            "/api/annotations/img_1",
            json={"expected_revision": record["revision"], "boxes": record["boxes"]},
        )
    with TestClient(create_app(dataset, tax)) as c:
        record = c.get("/api/annotations/img_1").json()
    assert record["reviewed"] is True
    assert record["revision"] == 1


def test_interrupted_write_leaves_old_or_new_file(dataset, tax, monkeypatch):
    store = ReviewStore(dataset, tax)
    before = (dataset / "img_0.xml").read_bytes()
    record = store.get_record("img_0")
    from weedlab import fsio
    from weedlab.service import BoxModel

    import os as _os

    real_replace = _os.replace
    calls = {"n": 0}

    def exploding_replace(src, dst):
        calls["n"] += 1
        raise OSError("simulated crash before rename")

    monkeypatch.setattr(fsio.os, "replace", exploding_replace)
    boxes = [BoxModel(**{**record["boxes"][0], "xmin": record["boxes"][0]["xmin"] + 1})]
    with pytest.raises(OSError):
        store.put_record("img_0", boxes, expected_revision=record["revision"])
    monkeypatch.setattr(fsio.os, "replace", real_replace)

    assert calls["n"] == 1
    # old version intact, no temp litter, revision unchanged
    assert (dataset / "img_0.xml").read_bytes() == before
    assert not list(dataset.glob("*.tmp"))
    assert store.get_record("img_0")["revision"] == record["revision"]


def test_taxonomy_endpoint(client):
    payload = client.get("/api/taxonomy").json()
    assert len(payload["species"]) == 16
    by_code = {s["code"]: s for s in payload["species"]}
    assert by_code["SORHA"]["weeks"] == list(range(3, 12))
    assert by_code["AMBEL"]["weeks"] == list(range(1, 12))
    assert sum(len(s["weeks"]) for s in payload["species"]) == 174

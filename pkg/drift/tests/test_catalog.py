import json
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from drift.catalog import load_catalog, select_objects, spec_from_entry
from drift.exceptions import UnknownObjectError

CATALOG_IDS = [
    "deformed_inflatable",
    "orange_inflatable",
    "banana_boat",
    "orange_printed",
    "red_black_printed",
]


def sample_entry(**params):
    defaults = {
        "id": "sample_raft",
        "m_o": 2.0,
        "A_a": 3.0,
        "submerged_fraction": 0.10,
        "C_D": 1.0,
        "C_L": 0.2,
    }
    defaults.update(params)

    return defaults


class LoadCatalogTests(SimpleTestCase):
    def test_bundled_catalog(self):
        objects = load_catalog()

        self.assertEqual([obj.id for obj in objects], CATALOG_IDS)
        self.assertTrue(all(obj.description for obj in objects))

    def test_bundled_masses_and_areas(self):
        by_id = {obj.id: obj for obj in load_catalog()}

        self.assertEqual(by_id["banana_boat"].m_o, 5.634)
        self.assertEqual(by_id["banana_boat"].A_a, 5.314)
        self.assertEqual(by_id["orange_printed"].m_o, 4.022)
        self.assertAlmostEqual(by_id["deformed_inflatable"].gamma, 1 / 11, places=12)

    def test_list_payload_and_duplicates(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "objects.json"
            path.write_text(json.dumps([sample_entry(), sample_entry(id="other")]))
            self.assertEqual(len(load_catalog(path)), 2)

            path.write_text(json.dumps({"objects": [sample_entry(), sample_entry()]}))
            with self.assertRaises(ValueError):
                load_catalog(path)


class SpecFromEntryTests(SimpleTestCase):
    def test_single_pair_used_for_both_media(self):
        obj = spec_from_entry(sample_entry())

        self.assertEqual((obj.C_D_air, obj.C_D_water), (1.0, 1.0))
        self.assertEqual((obj.C_L_air, obj.C_L_water), (0.2, 0.2))
        self.assertAlmostEqual(obj.A_w, 0.3)
        self.assertEqual(obj.name, "sample_raft")

    def test_explicit_area_and_media(self):
        entry = sample_entry(A_w=0.5, C_D_water=0.7)
        entry.pop("submerged_fraction")

        obj = spec_from_entry(entry)

        self.assertEqual(obj.A_w, 0.5)
        self.assertEqual((obj.C_D_air, obj.C_D_water), (1.0, 0.7))

    def test_missing_field_rejected(self):
        entry = sample_entry()
        entry.pop("m_o")

        with self.assertRaisesRegex(ValueError, "m_o"):
            spec_from_entry(entry)

    def test_missing_coefficients_rejected(self):
        entry = sample_entry()
        entry.pop("C_D")

        with self.assertRaises(ValueError):
            spec_from_entry(entry)


class SelectObjectsTests(SimpleTestCase):
    def setUp(self):
        self.objects = load_catalog()

    def test_empty_selection_keeps_all(self):
        self.assertEqual(select_objects(self.objects, []), self.objects)
        self.assertEqual(select_objects(self.objects, None), self.objects)

    def test_selection_order(self):
        selected = select_objects(self.objects, ["orange_printed", "banana_boat"])

        self.assertEqual([obj.id for obj in selected], ["orange_printed", "banana_boat"])

    def test_unknown_object_rejected(self):
        with self.assertRaises(UnknownObjectError):
            select_objects(self.objects, ["banana_boat", "kayak"])

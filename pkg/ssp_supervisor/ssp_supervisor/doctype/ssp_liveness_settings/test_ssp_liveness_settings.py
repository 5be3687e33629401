# Copyright (c) 2025, ahmad mohammad and Contributors
# See license.txt

import frappe
from frappe.tests.utils import FrappeTestCase

from ssp_supervisor.core.pn_io import load_fixture
from ssp_supervisor.ssp_supervisor.doctype.ssp_liveness_settings.ssp_liveness_settings import (
	APP_FOLDER,
	generate_analysis_report,
	save_net_file_to_folder,
)


class TestSSPLivenessSettings(FrappeTestCase):
	def test_rejects_zero_node_budget(self):
		settings = frappe.get_doc("SSP Liveness Settings")
		settings.node_budget = 0
		self.assertRaises(frappe.ValidationError, settings.save)

	def test_report_of_invalid_net_lists_problems(self):
		doc = load_fixture("two_agents")
		report = generate_analysis_report(doc, "not an SSP", None, None, ["Condition 1: example"])
		self.assertIn("Net: two_agents", report)
		self.assertIn("Problems (1):", report)

	def test_net_file_saved_in_import_folder(self):
		name = save_net_file_to_folder("NET uploaded\n", "uploaded.net", APP_FOLDER)
		file_doc = frappe.get_doc("File", name)
		self.assertTrue(file_doc.is_private)
		self.assertTrue(file_doc.file_name.endswith("_uploaded.net"))
		self.assertEqual(frappe.db.get_value("File", file_doc.folder, "file_name"), "SSP Supervisor Net Imports")

		again = frappe.get_doc("File", save_net_file_to_folder("NET uploaded\n", "uploaded.net", APP_FOLDER))
		self.assertEqual(again.folder, file_doc.folder)

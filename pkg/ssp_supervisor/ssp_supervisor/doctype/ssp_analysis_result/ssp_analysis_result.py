# Copyright (c) 2025, ahmad mohammad and contributors
# For license information, please see license.txt

from frappe.model.document import Document


class SSPAnalysisResult(Document):
	pass

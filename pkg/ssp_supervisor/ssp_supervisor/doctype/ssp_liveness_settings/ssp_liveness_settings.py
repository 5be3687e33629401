# Copyright (c) 2025, ahmad mohammad and contributors
# For license information, please see license.txt
# File: ssp_supervisor/ssp_supervisor/doctype/ssp_liveness_settings/ssp_liveness_settings.py

import frappe
from frappe.model.document import Document
from frappe.utils import cint
from datetime import datetime
import traceback
import base64

from ssp_supervisor.core.analysis import full_pipeline_census
from ssp_supervisor.core.exceptions import SspError
from ssp_supervisor.core.pn_io import parse_net
from ssp_supervisor.core.ssp import CONDITIONS, validate_ssp
from ssp_supervisor.core.supervisor import RandomPolicy, run

APP_FOLDER = "SSP Supervisor"


class SSPLivenessSettings(Document):
    def before_save(self):
        """Validate settings before save"""
        if cint(self.node_budget) < 1:
            frappe.throw(f"Node Budget must be at least 1, got {self.node_budget}")
        if cint(self.simulate_steps) < 0:
            frappe.throw(f"Simulation Steps cannot be negative, got {self.simulate_steps}")


@frappe.whitelist()
def process_net_import(doc_name, file_content, file_name):
    """Validate an uploaded net, synthesize its supervisor and store the census report"""
    try:
        settings_doc = frappe.get_doc("SSP Liveness Settings", doc_name)

        # Handle file content - it might be base64 encoded or already a string
        if isinstance(file_content, str):
            try:
                net_text = base64.b64decode(file_content, validate=True).decode('utf-8')
            except Exception:
                net_text = file_content
        else:
            net_text = file_content.decode('utf-8')

        saved_file_name = save_net_file_to_folder(file_content, file_name, APP_FOLDER)

        doc = parse_net(net_text)
        errors = []
        pipeline = None
        trace_summary = None

        validation = validate_ssp(doc)
        if not validation.ok:
            for number in validation.failed:
                for evidence in validation.conditions[number].evidence:
                    errors.append(f"Condition {number} ({CONDITIONS[number]}): {evidence}")
        else:
            pipeline = full_pipeline_census(doc, cint(settings_doc.node_budget), bool(settings_doc.reduce_net))
            steps = cint(settings_doc.simulate_steps)
            if steps:
                try:
                    synthesis = pipeline.synthesis
                    outcome = run(synthesis.document, synthesis.supervised, RandomPolicy(cint(settings_doc.seed)), steps)
                    trace_summary = f"{len(outcome.trace)} steps, {outcome.verdict.value}"
                except SspError as e:
                    errors.append(f"Supervised run: {str(e)}")

        verdict = get_verdict(validation, pipeline)
        report = generate_analysis_report(doc, verdict, pipeline, trace_summary, errors)

        settings_doc.append('ssp_analysis_history', {
            'analysed_on': datetime.now(),
            'net_file': saved_file_name
        })

        settings_doc.append('ssp_analysis_result', {
            'analysed_on': datetime.now(),
            'net_file': saved_file_name,
            'verdict': verdict,
            'report': report
        })

        settings_doc.save()

        return {
            'status': 'success',
            'message': f"Analysis of {doc.name} completed: {verdict}. {len(errors)} problems logged.",
            'verdict': verdict,
            'errors_count': len(errors),
            'report': report
        }

    except Exception as e:
        frappe.log_error(f"SSP Net Analysis Error: {str(e)}\n{traceback.format_exc()}")
        return {
            'status': 'error',
            'message': f"Analysis failed: {str(e)}"
        }


def get_verdict(validation, pipeline):
    if not validation.ok:
        return "not an SSP"
    if pipeline.rows["control"].livelock:
        return "supervised net not live"
    return "supervised net live"


def generate_analysis_report(doc, verdict, pipeline, trace_summary, errors):
    """Plain-text summary followed by the full census report"""
    report_lines = [
        f"Net: {doc.name}",
        f"Places: {len(doc.net.places)}, transitions: {len(doc.net.transitions)}",
        f"Verdict: {verdict}"
    ]

    if trace_summary:
        report_lines.append(f"Seeded supervised run: {trace_summary}")

    if pipeline is not None:
        report_lines.append("")
        report_lines.append(pipeline.table())
        report_lines.append("")
        report_lines.append(pipeline.render())

    if errors:
        report_lines.append(f"\nProblems ({len(errors)}):")
        for error in errors:
            report_lines.append(f"- {error}")

    return "\n".join(report_lines)


def save_net_file_to_folder(file_content, file_name, app_name):
    """Save the uploaded net in the app's import folder, creating the folder on first use"""
    try:
        folder_name = f"{app_name} Net Imports"
        folder = frappe.db.get_value('File', {'file_name': folder_name, 'is_folder': 1}, 'name')
        if not folder:
            folder = frappe.get_doc({
                'doctype': 'File',
                'file_name': folder_name,
                'is_folder': 1,
                'folder': 'Home'
            }).insert(ignore_permissions=True).name

        if isinstance(file_content, str):
            try:
                file_bytes = base64.b64decode(file_content, validate=True)
            except Exception:
                file_bytes = file_content.encode('utf-8')
        else:
            file_bytes = file_content

        file_doc = frappe.get_doc({
            'doctype': 'File',
            'file_name': f"{datetime.now().strftime('%Y%m%d_%H%M%S')}_{file_name}",
            'folder': folder,
            'content': file_bytes,
            'is_private': 1
        })
        file_doc.insert(ignore_permissions=True)
        return file_doc.name

    except Exception as e:
        frappe.log_error(f"Error saving net file {file_name}: {str(e)}")
        return file_name

# Copyright (c) 2025, ahmad mohammad and contributors
# For license information, please see license.txt

import logging

APP_NAME = "ssp_supervisor"


def get_logger(name=None):
    """Frappe's app logger inside a bench, a plain stdlib logger everywhere else"""
    try:
        import frappe

        if getattr(frappe.local, "site", None):
            return frappe.logger(APP_NAME)
    except ImportError:
        pass
    return logging.getLogger(f"{APP_NAME}.{name}" if name else APP_NAME)

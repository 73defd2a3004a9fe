#!/usr/bin/env python3
"""
Flask Web Service for the UCQ Rewriter
JSON endpoints for rewriting, rule-set classification and the bounded chase
oracle, for batch clients posting DLGP+ text
"""

import argparse
import threading
import time
from functools import wraps

from flask import Flask, jsonify, request
from werkzeug.exceptions import HTTPException

from chase_oracle import DEFAULT_DEPTH, entails_with_result
from dlgp_io import DlgpSyntaxError, dumps, parse
from fragments import is_fus_guaranteed
from logic_core import FreshNames
from reduction import normalize_problem
from rewrite_engine import DEFAULT_K, DEFAULT_MAX_ITERATIONS, RewriteBudget
from rewriter import name_seed, parse_k, run_rewriting, ucq_to_dict
from rule_model import ValidationError

# Rate limiting storage
_rate_limit_store = {}
_rate_limit_lock = threading.Lock()

app = Flask(__name__)
app.config['MAX_CONTENT_LENGTH'] = 2 * 1024 * 1024  # 2MB of DLGP+ text per request
app.config['RATE_LIMIT_REQUESTS'] = 30  # Max requests per window
app.config['RATE_LIMIT_WINDOW'] = 60  # Window in seconds
app.config['MAX_TIMEOUT_SECS'] = 30.0  # Upper bound for timeout_secs
app.config['MAX_ITERATIONS'] = 256  # Upper bound for max_iterations
app.config['MAX_DEPTH'] = 8  # Upper bound for the oracle depth
app.config['NAME_SEED'] = name_seed()


class RequestError(ValueError):
    """A malformed request parameter"""


# Substrings that mark an error message as leaking paths or internals
SENSITIVE_PATTERNS = ('traceback', 'file "/', 'in <module>', '/home/', '/users/', 'c:\\', 'd:\\',
                      'password', 'secret', 'credential')
MAX_ERROR_LENGTH = 200


def rate_limit(f):
    """Allow RATE_LIMIT_REQUESTS calls per client within RATE_LIMIT_WINDOW seconds"""
    @wraps(f)
    def limited(*args, **kwargs):
        client = request.remote_addr or 'unknown'
        now = time.time()
        window = app.config['RATE_LIMIT_WINDOW']
        with _rate_limit_lock:
            recent = [t for t in _rate_limit_store.get(client, []) if now - t < window]
            if len(recent) >= app.config['RATE_LIMIT_REQUESTS']:
                _rate_limit_store[client] = recent
                retry_after = max(1, int(window - (now - recent[0])))
                response = jsonify({'error': 'Too many requests. Please try again later.'})
                response.headers['Retry-After'] = str(retry_after)
                return response, 429
            recent.append(now)
            _rate_limit_store[client] = recent
        return f(*args, **kwargs)
    return limited


def sanitize_error_message(error) -> str:
    """Error text safe to return to a client: no paths or internals, at most MAX_ERROR_LENGTH chars"""
    text = str(error)
    if any(pattern in text.lower() for pattern in SENSITIVE_PATTERNS):
        return 'An error occurred while processing the request. Please try again.'
    if len(text) > MAX_ERROR_LENGTH:
        text = text[:MAX_ERROR_LENGTH] + '...'
    return text


def input_error(error):
    """400 response with the positioned diagnostics of a parse or validation error"""
    body = {'error': sanitize_error_message(error)}
    diagnostics = getattr(error, 'diagnostics', None)
    if diagnostics:
        body['diagnostics'] = [d.to_dict() for d in diagnostics]
    return jsonify(body), 400


def read_payload():
    payload = request.get_json(silent=True)
    if not isinstance(payload, dict):
        raise RequestError('Expected a JSON object body')
    if not isinstance(payload.get('kb', ''), str):
        raise RequestError("'kb' must be DLGP+ text")
    return payload


def read_problem(payload):
    """Knowledge base and queries from the 'kb' and optional 'queries' texts"""
    kb_document = parse(payload.get('kb', ''))
    queries = payload.get('queries')
    if queries is None:
        ucq = kb_document.ucq()
    elif isinstance(queries, str):
        ucq = parse(queries).ucq()
    else:
        raise RequestError("'queries' must be DLGP+ text")
    return kb_document, ucq


def bounded_number(payload, key, default, upper, kind=int):
    value = payload.get(key, default)
    if value is None:
        return upper
    try:
        value = kind(value)
    except (TypeError, ValueError):
        raise RequestError(f"'{key}' must be a number")
    if value < 0:
        raise RequestError(f"'{key}' must not be negative")
    return min(value, upper)


@app.route('/rewrite', methods=['POST'])
@rate_limit
def rewrite():
    """
    Compute a UCQ-rewriting

    JSON body:
        kb: DLGP+ rules (and optionally queries)
        queries: DLGP+ queries (default: the queries of kb)
        k, max_iterations, timeout_secs: budgets (clamped to the service limits)
    """
    try:
        payload = read_payload()
        kb_document, ucq = read_problem(payload)
        if not len(ucq):
            raise RequestError('No query to rewrite')
        k = payload.get('k', DEFAULT_K)
        k = parse_k(str(k)) if k is not None else None
        budget = RewriteBudget(
            max_iterations=bounded_number(payload, 'max_iterations', DEFAULT_MAX_ITERATIONS,
                                          app.config['MAX_ITERATIONS']),
            timeout_secs=bounded_number(payload, 'timeout_secs', app.config['MAX_TIMEOUT_SECS'],
                                        app.config['MAX_TIMEOUT_SECS'], kind=float),
        )
        result, stats = run_rewriting(kb_document.knowledge_base(), ucq, k=k, budget=budget,
                                      seed=app.config['NAME_SEED'])
    except (DlgpSyntaxError, ValidationError, ValueError, argparse.ArgumentTypeError) as e:
        return input_error(e)
    except HTTPException:
        raise
    except Exception as e:
        return jsonify({'error': f'Rewriting failed: {sanitize_error_message(e)}'}), 500

    body = ucq_to_dict(result.ucq)
    body['dlgp'] = dumps(result.ucq)
    body['converged'] = result.converged
    body['stop_reason'] = result.stats.stop_reason
    body['stats'] = vars(stats)
    return jsonify(body)


@app.route('/classify', methods=['POST'])
@rate_limit
def classify():
    """Fragment report of the rules (plus the rules made from negated queries, if any)"""
    try:
        payload = read_payload()
        kb_document, ucq = read_problem(payload)
        kb = kb_document.knowledge_base()
        if len(ucq):
            rules, _ = normalize_problem(kb, ucq, FreshNames(start=app.config['NAME_SEED']))
        else:
            rules = kb.rules
        report = is_fus_guaranteed(rules, ucq.answer_vars)
    except (DlgpSyntaxError, ValidationError, ValueError) as e:
        return input_error(e)
    except HTTPException:
        raise
    except Exception as e:
        return jsonify({'error': f'Classification failed: {sanitize_error_message(e)}'}), 500
    return jsonify(report.to_dict())


@app.route('/oracle', methods=['POST'])
@rate_limit
def oracle():
    """
    Bounded chase entailment check

    JSON body:
        kb: DLGP+ rules (and optionally facts and queries)
        facts: DLGP+ facts (default: the facts of kb)
        queries: DLGP+ queries (default: the queries of kb)
        depth: chase rounds (clamped to MAX_DEPTH)
    """
    try:
        payload = read_payload()
        kb_document, ucq = read_problem(payload)
        if not len(ucq):
            raise RequestError('No query to check')
        kb = kb_document.knowledge_base()
        facts_text = payload.get('facts')
        if facts_text is not None and not isinstance(facts_text, str):
            raise RequestError("'facts' must be DLGP+ text")
        facts = parse(facts_text).knowledge_base().facts if facts_text is not None else kb.facts
        depth = bounded_number(payload, 'depth', DEFAULT_DEPTH, app.config['MAX_DEPTH'])
        rules, positives = normalize_problem(kb, ucq, FreshNames(start=app.config['NAME_SEED']))
        answer, result = entails_with_result(rules, facts, positives, max_depth=depth)
    except (DlgpSyntaxError, ValidationError, ValueError) as e:
        return input_error(e)
    except HTTPException:
        raise
    except Exception as e:
        return jsonify({'error': f'Oracle failed: {sanitize_error_message(e)}'}), 500
    return jsonify({
        'result': str(answer),
        'saturated': result.saturated,
        'overflow': result.overflow,
        'depth': result.depth,
        'open_branches': len(result.branches),
    })


@app.route('/health')
def health():
    """Health check endpoint"""
    return jsonify({'status': 'ok'})


@app.errorhandler(413)
def too_large(e):
    """Handle request too large error"""
    limit_kb = app.config['MAX_CONTENT_LENGTH'] // 1024
    return jsonify({'error': f'Request too large. Maximum size is {limit_kb}KB'}), 413


if __name__ == '__main__':
    print("=" * 60)
    print("UCQ Rewriter - Web Service")
    print("=" * 60)
    print("\nStarting server...")
    print("Endpoints at: http://localhost:5000")
    print("  POST /rewrite   {kb, queries?, k?, max_iterations?, timeout_secs?}")
    print("  POST /classify  {kb, queries?}")
    print("  POST /oracle    {kb, facts?, queries?, depth?}")
    print("  GET  /health")
    print("\nPress CTRL+C to stop the server")
    print("=" * 60)

    app.run(debug=False, host='0.0.0.0', port=5000)

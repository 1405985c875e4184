"""HTTP completion-endpoint backend.

Speaks the common completion protocol: POST {model, prompt, max_tokens: 1,
temperature: 0, logprobs: k} and read the top-k next-token log-probability
map from the response. The label distribution is the softmax-renormalized
restriction of that map to each label's first rendered token. Full-vocabulary
probabilities are not observable over such an API, so k is configuration
and belongs in the run manifest.
"""

import math
import os
import threading
from dataclasses import dataclass, field

import requests

from .errors import BackendError, IncompleteLogprobsError
from .model import ClassDistribution
from .prompting import BuiltContext, PromptTemplate, render_query_prompt


@dataclass(frozen=True)
class RemoteConfig:
    endpoint: str                       # e.g. "http://localhost:8000"
    path: str = "/v1/completions"
    model_name: str = "default"
    auth_token_env: str = "ICUL_API_TOKEN"
    top_logprobs: int = 20
    max_concurrency: int = 4
    timeout: float = 30.0


def first_token(label: str) -> str:
    """The token a completion endpoint would emit first for this label."""
    parts = label.split()
    return parts[0] if parts else label


@dataclass(eq=False)
class RemoteBackend:
    config: RemoteConfig
    label_set: tuple
    template: PromptTemplate = field(default_factory=PromptTemplate)
    _gate: threading.Semaphore = field(init=False, repr=False)
    _session: requests.Session = field(init=False, repr=False)

    def __post_init__(self):
        self._gate = threading.Semaphore(self.config.max_concurrency)
        self._session = requests.Session()

    def _headers(self) -> dict:
        token = os.environ.get(self.config.auth_token_env, "")
        headers = {"Content-Type": "application/json"}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def complete(self, prompt: str) -> dict:
        """One completion request; returns the next-token logprob map."""
        body = {
            "model": self.config.model_name,
            "prompt": prompt,
            "max_tokens": 1,
            "temperature": 0,
            "logprobs": self.config.top_logprobs,
        }
        url = self.config.endpoint.rstrip("/") + self.config.path
        with self._gate:
            try:
                resp = self._session.post(
                    url, json=body, headers=self._headers(),
                    timeout=self.config.timeout)
            except requests.RequestException as exc:
                raise BackendError(f"transport failure: {exc}") from exc
        if resp.status_code != 200:
            raise BackendError(
                f"endpoint returned HTTP {resp.status_code}",
                status=resp.status_code)
        try:
            payload = resp.json()
            return payload["choices"][0]["logprobs"]["top_logprobs"][0]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise BackendError(f"malformed completion response: {exc}") from exc

    def predict(self, context, query: str) -> ClassDistribution:
        """Render the prompt, fetch logprobs, renormalize over label tokens.

        A BuiltContext is rendered as built (block structure intact); a bare
        demonstration sequence is joined with the pair separator.
        """
        if isinstance(context, BuiltContext):
            ctx = context
        else:
            ctx = BuiltContext(
                demonstrations=tuple(context),
                rendered=self.template.pair_separator.join(
                    self.template.render_pair(t, y) for t, y in context),
            )
        prompt = render_query_prompt(ctx, query, self.template)
        logprobs = self.complete(prompt)

        scores = {}
        for label in self.label_set:
            token = first_token(label)
            # tokenizers often attach the leading space to the label token
            if token in logprobs:
                lp = logprobs[token]
            elif " " + token in logprobs:
                lp = logprobs[" " + token]
            else:
                raise IncompleteLogprobsError(
                    f"token {token!r} for label {label!r} missing from "
                    f"top-{self.config.top_logprobs} logprobs")
            scores[label] = math.exp(lp)
        total = sum(scores.values())
        probs = {y: scores[y] / total for y in self.label_set}
        return ClassDistribution(probs=probs)

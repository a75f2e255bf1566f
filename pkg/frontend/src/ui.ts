// DOM layer: renders the controller's view and forwards user input.

import { SessionApi } from './api.js';
import { SessionController, UiSessionView } from './controller.js';

export function mountApp(root: HTMLElement, baseUrl: string): SessionController {
  root.innerHTML = `
    <section class="setup">
      <h1>Audio personalization session</h1>
      <form id="setup-form">
        <label>Budget <input id="budget" type="number" value="30" min="1"></label>
        <label>Audiogram queries (L) <input id="lcount" type="number" value="5" min="0" max="7"></label>
        <label>Corruption seed <input id="cseed" type="number" value="0"></label>
        <button id="start" type="submit">Start session</button>
      </form>
    </section>
    <section class="session" hidden>
      <div id="error" class="error" hidden></div>
      <div class="gauge">
        <span id="gauge-text"></span>
        <progress id="gauge-bar" max="1" value="0"></progress>
      </div>
      <audio id="player" controls></audio>
      <div class="ab">
        <button id="play-candidate" type="button">Candidate</button>
        <button id="play-corrupted" type="button">Corrupted (A)</button>
        <button id="play-best" type="button">Current best (B)</button>
      </div>
      <div class="rate">
        <input id="score" type="range" min="0" max="10" step="0.5" value="5">
        <span id="score-value">5</span>
        <button id="submit" type="button">Submit score</button>
        <button id="finish" type="button">Stop early</button>
      </div>
      <div class="status">
        <span id="best"></span>
        <ol id="history"></ol>
      </div>
      <div id="summary" hidden></div>
    </section>
  `;

  const el = <T extends HTMLElement>(id: string) => root.querySelector<T>(`#${id}`)!;
  const api = new SessionApi(baseUrl);
  const player = el<HTMLAudioElement>('player');
  let lastClipVersion = -1;

  const render = (view: UiSessionView) => {
    root.querySelector<HTMLElement>('.setup')!.hidden = view.phase !== 'idle';
    root.querySelector<HTMLElement>('.session')!.hidden = view.phase === 'idle';
    const errorBox = el<HTMLDivElement>('error');
    errorBox.hidden = !view.error;
    errorBox.textContent = view.error ?? '';

    const used = view.gauge.filterUsed + view.gauge.dimensionUsed;
    el<HTMLSpanElement>('gauge-text').textContent =
      `queries: ${used}/${view.gauge.total} (ratings ${view.gauge.filterUsed}, audiogram ${view.gauge.dimensionUsed})`;
    el<HTMLProgressElement>('gauge-bar').value = view.gauge.total ? used / view.gauge.total : 0;

    const canScore = view.phase === 'awaiting-score' && !view.busy;
    el<HTMLButtonElement>('submit').disabled = !canScore;
    el<HTMLInputElement>('score').disabled = !canScore;
    el<HTMLButtonElement>('finish').disabled = view.phase !== 'awaiting-score' || view.busy;
    el<HTMLButtonElement>('play-best').disabled = view.bestScore === null;
    el<HTMLButtonElement>('play-candidate').disabled = view.phase !== 'awaiting-score';

    el<HTMLSpanElement>('best').textContent =
      view.bestScore === null ? 'no ratings yet' : `best score so far: ${view.bestScore}`;
    const history = el<HTMLOListElement>('history');
    history.innerHTML = view.scores.map((s) => `<li>${s}</li>`).join('');

    const summary = el<HTMLDivElement>('summary');
    summary.hidden = view.phase !== 'finished';
    if (view.phase === 'finished') {
      summary.textContent = `Session finished. Best score: ${view.bestScore ?? 'n/a'} over ${view.scores.length} ratings.`;
    }

    if (view.phase === 'awaiting-score' && view.clipVersion !== lastClipVersion && view.sessionId) {
      lastClipVersion = view.clipVersion;
      player.src = `${api.clipUrl(view.sessionId)}&v=${view.clipVersion}`;
    }
  };

  const controller = new SessionController(api, render);

  el<HTMLFormElement>('setup-form').addEventListener('submit', (event) => {
    event.preventDefault();
    void controller
      .start({
        budget: Number(el<HTMLInputElement>('budget').value),
        l_count: Number(el<HTMLInputElement>('lcount').value),
        corruption: { kind: 'random', seed: Number(el<HTMLInputElement>('cseed').value) },
      })
      .catch(() => {});
  });

  el<HTMLInputElement>('score').addEventListener('input', () => {
    el<HTMLSpanElement>('score-value').textContent = el<HTMLInputElement>('score').value;
  });

  el<HTMLButtonElement>('submit').addEventListener('click', () => {
    void controller.submitScore(Number(el<HTMLInputElement>('score').value)).catch(() => {});
  });

  el<HTMLButtonElement>('finish').addEventListener('click', () => {
    void controller.finish().catch(() => {});
  });

  el<HTMLButtonElement>('play-candidate').addEventListener('click', () => {
    const view = controller.view;
    if (view.sessionId) player.src = `${api.clipUrl(view.sessionId)}&v=${view.clipVersion}`;
  });
  el<HTMLButtonElement>('play-corrupted').addEventListener('click', () => {
    const view = controller.view;
    if (view.sessionId) player.src = api.clipUrl(view.sessionId, 'corrupted');
  });
  el<HTMLButtonElement>('play-best').addEventListener('click', () => {
    const view = controller.view;
    if (view.sessionId) player.src = api.clipUrl(view.sessionId, 'best');
  });

  return controller;
}

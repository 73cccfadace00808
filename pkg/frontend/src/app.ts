import { ApiError, StudioClient, StylizeInfo } from './api.js';
import { StylizeCoalescer } from './coalesce.js';
import { DualViewer } from './viewer.js';

const TEXTURE_HINT = 'upload a texture first, then stylize';

/**
 * Wires the studio page: upload panel, magnification slider, metrics
 * strip, export button and error banners. All geometry comes from the
 * API; the page never edits mesh data itself.
 */
export class StudioApp {
    private readonly client: StudioClient;
    private readonly viewer: DualViewer;
    private readonly coalescer: StylizeCoalescer<StylizeInfo>;
    private sessionId: string | null = null;

    private readonly objInput: HTMLInputElement;
    private readonly pngInput: HTMLInputElement;
    private readonly slider: HTMLInputElement;
    private readonly sliderValue: HTMLElement;
    private readonly sliderHint: HTMLElement;
    private readonly rmsCell: HTMLElement;
    private readonly vertexCell: HTMLElement;
    private readonly exportButton: HTMLButtonElement;
    private readonly banners: HTMLElement;

    constructor(root: Document, apiBase: string) {
        this.client = new StudioClient(apiBase);
        const el = <T extends HTMLElement>(id: string): T => {
            const found = root.getElementById(id);
            if (!found) throw new Error(`missing #${id}`);
            return found as T;
        };
        this.objInput = el<HTMLInputElement>('obj-input');
        this.pngInput = el<HTMLInputElement>('png-input');
        this.slider = el<HTMLInputElement>('magnification');
        this.sliderValue = el('magnification-value');
        this.sliderHint = el('magnification-hint');
        this.rmsCell = el('metric-rms');
        this.vertexCell = el('metric-vertices');
        this.exportButton = el<HTMLButtonElement>('export-button');
        this.banners = el('banners');
        this.viewer = new DualViewer(el('viewport-original'), el('viewport-stylized'));
        this.coalescer = new StylizeCoalescer<StylizeInfo>(
            factor => this.client.stylize(this.requireSession(), factor),
            {
                onResult: info => void this.applyStylize(info),
                onError: error => this.handleError(error),
            },
        );
    }

    mount(): void {
        this.objInput.addEventListener('change', () => void this.loadModel());
        this.pngInput.addEventListener('change', () => void this.loadTexture());
        this.slider.addEventListener('input', () => {
            this.sliderValue.textContent = Number(this.slider.value).toFixed(2);
        });
        // 'change' fires on slider release; in-flight requests coalesce
        this.slider.addEventListener('change', () => {
            if (!this.sessionId) return;
            this.coalescer.request(parseFloat(this.slider.value));
        });
        this.exportButton.addEventListener('click', () => void this.exportStylized());
        window.addEventListener('resize', () => this.viewer.resize());
    }

    private requireSession(): string {
        if (!this.sessionId) throw new Error('no active session');
        return this.sessionId;
    }

    private async loadModel(): Promise<void> {
        const file = this.objInput.files?.[0];
        if (!file) return;
        try {
            const session = await this.client.createSession(await file.text());
            this.sessionId = session.sessionId;
            this.viewer.showOriginal(await this.client.fetchMesh(session.sessionId, 'original'));
            this.viewer.clearStylized();
            this.vertexCell.textContent = String(session.vertexCount);
            this.rmsCell.textContent = '–';
            this.pngInput.disabled = false;
            this.slider.disabled = false;
            this.sliderHint.textContent = TEXTURE_HINT;
            this.exportButton.disabled = true;
        } catch (error) {
            this.handleError(error);
        }
    }

    private async loadTexture(): Promise<void> {
        const file = this.pngInput.files?.[0];
        if (!file || !this.sessionId) return;
        try {
            await this.client.uploadTexture(this.sessionId, file);
            this.slider.disabled = false;
            this.sliderHint.textContent = '';
            // populate the stylized pane at the current factor right away
            this.coalescer.request(parseFloat(this.slider.value));
        } catch (error) {
            this.handleError(error);
        }
    }

    private async applyStylize(info: StylizeInfo): Promise<void> {
        try {
            this.rmsCell.textContent = info.rms.toFixed(4);
            this.vertexCell.textContent = String(info.vertexCount);
            this.viewer.showStylized(await this.client.fetchMesh(this.requireSession(), 'stylized'));
            this.exportButton.disabled = false;
        } catch (error) {
            this.handleError(error);
        }
    }

    private async exportStylized(): Promise<void> {
        if (!this.sessionId) return;
        try {
            const text = await this.client.fetchMesh(this.sessionId, 'stylized');
            const url = URL.createObjectURL(new Blob([text], { type: 'text/plain' }));
            const anchor = document.createElement('a');
            anchor.href = url;
            anchor.download = 'stylized.obj';
            anchor.click();
            URL.revokeObjectURL(url);
        } catch (error) {
            this.handleError(error);
        }
    }

    private handleError(error: unknown): void {
        if (error instanceof ApiError && error.status === 409) {
            this.slider.disabled = true;
            this.sliderHint.textContent = TEXTURE_HINT;
        }
        const reason = error instanceof Error ? error.message : String(error);
        this.banner(reason);
    }

    private banner(message: string): void {
        const item = document.createElement('div');
        item.className = 'banner';
        const text = document.createElement('span');
        text.textContent = message;
        const dismiss = document.createElement('button');
        dismiss.textContent = '×';
        dismiss.addEventListener('click', () => item.remove());
        item.append(text, dismiss);
        this.banners.appendChild(item);
    }
}

import * as THREE from 'three';
import { OrbitControls } from 'three/addons/controls/OrbitControls.js';
import { OBJLoader } from 'three/addons/loaders/OBJLoader.js';

interface Pane {
    renderer: THREE.WebGLRenderer;
    scene: THREE.Scene;
    camera: THREE.PerspectiveCamera;
    controls: OrbitControls;
    model: THREE.Object3D | null;
}

/**
 * Side-by-side viewports (original | stylized) with synchronized
 * cameras: orbiting or zooming either pane moves both.
 */
export class DualViewer {
    private readonly panes: Pane[];
    private readonly loader = new OBJLoader();
    private readonly material = new THREE.MeshStandardMaterial({
        color: 0xb8c4d0,
        metalness: 0.1,
        roughness: 0.75,
    });
    private syncing = false;

    constructor(left: HTMLElement, right: HTMLElement) {
        this.panes = [left, right].map(container => this.createPane(container));
        for (const pane of this.panes) {
            pane.controls.addEventListener('change', () => this.syncFrom(pane));
        }
        const tick = () => {
            for (const pane of this.panes) {
                pane.renderer.render(pane.scene, pane.camera);
            }
            requestAnimationFrame(tick);
        };
        requestAnimationFrame(tick);
    }

    showOriginal(objText: string): void {
        this.show(0, objText);
        const model = this.panes[0].model;
        if (model) this.fit(model);
    }

    showStylized(objText: string): void {
        this.show(1, objText);
    }

    clearStylized(): void {
        const pane = this.panes[1];
        if (pane.model) pane.scene.remove(pane.model);
        pane.model = null;
    }

    resize(): void {
        for (const pane of this.panes) {
            const el = pane.renderer.domElement.parentElement;
            if (!el) continue;
            pane.renderer.setSize(el.clientWidth, el.clientHeight);
            pane.camera.aspect = el.clientWidth / Math.max(1, el.clientHeight);
            pane.camera.updateProjectionMatrix();
        }
    }

    private createPane(container: HTMLElement): Pane {
        const renderer = new THREE.WebGLRenderer({ antialias: true });
        renderer.setPixelRatio(Math.min(window.devicePixelRatio, 2));
        renderer.setSize(container.clientWidth, container.clientHeight);
        container.appendChild(renderer.domElement);

        const scene = new THREE.Scene();
        scene.background = new THREE.Color(0x10141a);
        scene.add(new THREE.HemisphereLight(0xffffff, 0x303040, 1.2));
        const key = new THREE.DirectionalLight(0xffffff, 1.4);
        key.position.set(2, 3, 2);
        scene.add(key);

        const aspect = container.clientWidth / Math.max(1, container.clientHeight);
        const camera = new THREE.PerspectiveCamera(45, aspect, 0.01, 100);
        camera.position.set(1.4, 1.1, 1.4);

        const controls = new OrbitControls(camera, renderer.domElement);
        controls.enableDamping = false;

        return { renderer, scene, camera, controls, model: null };
    }

    private show(index: number, objText: string): void {
        const pane = this.panes[index];
        const model = this.loader.parse(objText);
        model.traverse(child => {
            const mesh = child as THREE.Mesh;
            if (mesh.isMesh) {
                mesh.material = this.material;
                mesh.geometry.computeVertexNormals();
            }
        });
        if (pane.model) pane.scene.remove(pane.model);
        pane.model = model;
        pane.scene.add(model);
    }

    private fit(model: THREE.Object3D): void {
        const box = new THREE.Box3().setFromObject(model);
        const center = box.getCenter(new THREE.Vector3());
        const radius = Math.max(box.getSize(new THREE.Vector3()).length() / 2, 1e-6);
        const offset = new THREE.Vector3(1, 0.8, 1).normalize().multiplyScalar(radius * 2.8);
        for (const pane of this.panes) {
            pane.controls.target.copy(center);
            pane.camera.position.copy(center).add(offset);
            pane.camera.near = radius / 100;
            pane.camera.far = radius * 100;
            pane.camera.updateProjectionMatrix();
            pane.controls.update();
        }
    }

    private syncFrom(source: Pane): void {
        // controls.update() below re-enters 'change'; the flag breaks the loop
        if (this.syncing) return;
        this.syncing = true;
        for (const pane of this.panes) {
            if (pane === source) continue;
            pane.camera.position.copy(source.camera.position);
            pane.camera.quaternion.copy(source.camera.quaternion);
            pane.camera.zoom = source.camera.zoom;
            pane.camera.updateProjectionMatrix();
            pane.controls.target.copy(source.controls.target);
            pane.controls.update();
        }
        this.syncing = false;
    }
}

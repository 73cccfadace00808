import { StudioApp } from './app.js';

const apiBase = new URLSearchParams(window.location.search).get('api') ?? 'http://127.0.0.1:8000';
const app = new StudioApp(document, apiBase);
app.mount();

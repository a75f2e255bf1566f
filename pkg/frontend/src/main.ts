import { mountApp } from './ui.js';

const root = document.getElementById('app');
if (!root) throw new Error('missing #app container');

const baseUrl = new URLSearchParams(window.location.search).get('service') ?? 'http://127.0.0.1:8080';
mountApp(root, baseUrl);

"""Regenerate the bundled simnews corpus.

    python scripts/make_default_corpus.py [output.json]

The corpus holds 30 on-topic articles and 17 noise items (3 pdf, one each of
image/audio/video/archive/executable, a homepage, a section index, 3
placeholder pages, 2 keyword-stuffed spam pages and 2 off-topic articles).
Listings are keyed by the rendered queries of ``configs/simnews.json``.
"""

from __future__ import annotations

import html
import json
import sys
from pathlib import Path

TOPIC = "IFMIF-DONES"
OUT = Path(__file__).resolve().parents[1] / "src/newsharvest/simnews/data/default_corpus.json"

# host, outlet, language, date, slug, headline, byline, lead
ARTICLES = [
    ("www.elpais.com", "El País", "es", "2024-01-15", "ciencia/2024-01-15/ifmif-dones-adjudica-obra-civil",
     "IFMIF-DONES adjudica la obra civil del edificio principal en Escúzar",
     "Por Manuel Ansede",
     "El consorcio IFMIF-DONES ha adjudicado la obra civil del edificio principal del acelerador que se levanta en Escúzar, a 20 kilómetros de Granada."),
    ("www.elpais.com", "El País", "es", "2024-05-22", "economia/2024-05-22/la-fuente-de-neutrones-de-granada-atrae-empresas",
     "La fuente de neutrones de Granada atrae a cuarenta empresas proveedoras",
     "Por Ignacio Fariza",
     "Cuarenta empresas andaluzas se han registrado como proveedoras potenciales del proyecto IFMIF-DONES según la última convocatoria del consorcio."),
    ("www.elmundo.es", "El Mundo", "es", "2024-02-08", "ciencia-y-salud/ciencia/2024/02/08/ifmif-dones-calendario.html",
     "El calendario de IFMIF-DONES se retrasa un año por la licitación del acelerador",
     None,
     "La licitación del acelerador lineal de IFMIF-DONES acumula un retraso de doce meses respecto al calendario de 2021."),
    ("www.abc.es", "ABC", "es", "2024-03-03", "sociedad/ifmif-dones-ministra-visita-escuzar-20240303.html",
     "La ministra de Ciencia visita las obras de IFMIF-DONES en Escúzar",
     "Por Laura Peraita",
     "La ministra de Ciencia recorrió este domingo los terrenos donde se construye IFMIF-DONES y anunció una nueva partida presupuestaria."),
    ("www.ideal.es", "Ideal", "es", "2024-01-24", "granada/2024/01/24/ifmif-dones-empleo-escuzar.html",
     "IFMIF-DONES creará 300 empleos directos en el área metropolitana",
     "Por Jorge Pastor",
     "El proyecto IFMIF-DONES generará alrededor de 300 empleos directos durante su fase de operación, según el informe de impacto presentado en Granada."),
    ("www.ideal.es", "Ideal", "es", "2024-04-11", "granada/2024/04/11/vecinos-escuzar-acelerador.html",
     "Los vecinos de Escúzar preguntan por la seguridad del acelerador de neutrones",
     "Por Jorge Pastor",
     "Un centenar de vecinos asistió a la charla informativa sobre la seguridad de IFMIF-DONES organizada por el Ayuntamiento de Escúzar."),
    ("www.ideal.es", "Ideal", "es", "2024-06-02", "granada/2024/06/02/ifmif-dones-carretera-acceso.html",
     "La Junta licita la carretera de acceso a IFMIF-DONES",
     None,
     "La Junta de Andalucía ha licitado la carretera que conectará la autovía con la parcela de IFMIF-DONES en Escúzar."),
    ("www.granadahoy.com", "Granada Hoy", "es", "2024-02-19", "granada/IFMIF-DONES-contrato-blindaje_0_1870000001.html",
     "Firmado el contrato del blindaje biológico de IFMIF-DONES",
     "Por Carmen Rodríguez",
     "El blindaje biológico que rodeará la celda de ensayo de IFMIF-DONES ya tiene adjudicataria tras meses de evaluación técnica."),
    ("www.granadahoy.com", "Granada Hoy", "es", "2024-03-27", "granada/universidad-master-fusion_0_1870000002.html",
     "La Universidad de Granada lanza un máster ligado al proyecto de fusión",
     "Por Carmen Rodríguez",
     "La Universidad de Granada impartirá desde septiembre un máster en tecnologías de fusión vinculado a IFMIF-DONES."),
    ("www.granadahoy.com", "Granada Hoy", "es", "2024-05-30", "granada/croacia-se-suma-al-acelerador_0_1870000003.html",
     "Croacia confirma su aportación económica al acelerador de Escúzar",
     None,
     "El Gobierno de Croacia ha confirmado una aportación de cinco millones de euros para IFMIF-DONES."),
    ("www.europapress.es", "Europa Press", "es", "2024-01-30", "andalucia/granada-00356/noticia-ifmif-dones-consejo-rector-20240130.html",
     "El consejo rector de IFMIF-DONES aprueba el presupuesto de 2024",
     None,
     "El consejo rector del consorcio IFMIF-DONES ha aprobado un presupuesto de 48 millones de euros para el ejercicio 2024."),
    ("www.europapress.es", "Europa Press", "es", "2024-04-25", "andalucia/granada-00356/noticia-japon-italia-dones-20240425.html",
     "Japón e Italia estudian entrar en el consorcio de la fuente de neutrones",
     None,
     "Delegaciones de Japón e Italia visitaron Granada para estudiar su participación en IFMIF-DONES."),
    ("www.rtve.es", "RTVE", "es", "2024-02-27", "noticias/20240227/ifmif-dones-granada-fusion-nuclear/1600001.shtml",
     "Así será IFMIF-DONES, la instalación que probará materiales para la fusión nuclear",
     None,
     "IFMIF-DONES bombardeará con neutrones los materiales que deberán soportar el interior de los futuros reactores de fusión."),
    ("www.clarin.com", "Clarín", "es", "2024-03-15", "tecnologia/ifmif-dones-espana-fusion-nuclear_0_aBcDeF12.html",
     "España construye un acelerador clave para la energía de fusión",
     "Por Valeria Román",
     "En el sur de España avanza la construcción de IFMIF-DONES, un acelerador que ensayará materiales para reactores de fusión."),
    ("www.eluniversal.com.mx", "El Universal", "es", "2024-04-02", "ciencia-y-salud/ifmif-dones-fusion-granada-acelerador",
     "Granada apuesta por la fusión con un acelerador de partículas único",
     None,
     "La ciudad española de Granada alberga IFMIF-DONES, un acelerador de partículas diseñado para la investigación en fusión."),
    ("www.bbc.co.uk", "BBC", "en", "2024-02-12", "news/science-environment-68270001",
     "Spain's IFMIF-DONES neutron source moves into construction",
     "By Jonathan Amos",
     "Construction work has started on IFMIF-DONES, a neutron source in southern Spain that will test materials for future fusion power plants."),
    ("www.theguardian.com", "The Guardian", "en", "2024-03-20", "science/2024/mar/20/fusion-materials-test-facility-granada",
     "Inside the Granada facility that will stress-test fusion reactor materials",
     "By Ian Sample",
     "The IFMIF-DONES project near Granada will expose materials to the kind of neutron flux they would face inside a fusion reactor."),
    ("www.world-nuclear-news.org", "World Nuclear News", "en", "2024-01-18", "articles/ifmif-dones-accelerator-contract-awarded",
     "Accelerator contract awarded for IFMIF-DONES facility",
     None,
     "A contract for the first accelerator components of IFMIF-DONES has been awarded, the project consortium announced."),
    ("www.world-nuclear-news.org", "World Nuclear News", "en", "2024-05-08", "articles/croatia-joins-neutron-source-project",
     "Croatia formalises participation in European neutron source project",
     None,
     "Croatia has formalised its participation in IFMIF-DONES, the fusion materials irradiation facility under construction in Spain."),
    ("www.sciencebusiness.net", "Science|Business", "en", "2024-06-12", "news/fusion/eu-funding-boost-ifmif-dones",
     "EU regional funds back IFMIF-DONES as fusion race intensifies",
     None,
     "European regional development funds will cover a large share of the IFMIF-DONES construction budget."),
    ("www.asahi.com", "The Asahi Shimbun", "en", "2024-05-16", "ajw/articles/15270001",
     "Japan weighs role in Spanish fusion materials facility",
     None,
     "Japanese research agencies are weighing a contribution to IFMIF-DONES, which builds on decades of joint work on fusion materials."),
    ("www.lemonde.fr", "Le Monde", "fr", "2024-03-09", "sciences/article/2024/03/09/ifmif-dones-fusion-materiaux_6220001_1650684.html",
     "A Grenade, IFMIF-DONES va tester les matériaux de la fusion",
     "Par David Larousserie",
     "Le projet IFMIF-DONES, en construction près de Grenade, doit tester les matériaux des futurs réacteurs de fusion."),
    ("www.corriere.it", "Corriere della Sera", "it", "2024-04-18", "scienze/24_aprile_18/ifmif-dones-italia-fusione-granada.shtml",
     "L'Italia guarda a IFMIF-DONES per la ricerca sulla fusione",
     None,
     "L'Italia valuta una partecipazione a IFMIF-DONES, il progetto di Granada che studierà i materiali per la fusione."),
    ("www.jutarnji.hr", "Jutarnji list", "hr", "2024-05-31", "vijesti/znanost/hrvatska-i-ifmif-dones-15470001",
     "Hrvatska se pridružuje projektu IFMIF-DONES u Španjolskoj",
     None,
     "Hrvatska je potvrdila da se pridružuje projektu IFMIF-DONES i da će sudjelovati u razvoju akceleratora."),
    ("www.linkedin.com", "LinkedIn", "en", "2024-02-22", "posts/ifmif-dones_fusion-neutron-activity-7166000000001",
     "IFMIF-DONES team welcomes new accelerator engineers",
     None,
     "This month the IFMIF-DONES team in Granada welcomed twelve new accelerator engineers from six countries."),
    ("www.lamoncloa.gob.es", "La Moncloa", "es", "2024-03-26", "consejodeministros/referencias/paginas/2024/ifmif-dones-convenio.aspx",
     "El Consejo de Ministros autoriza el convenio de financiación de IFMIF-DONES",
     None,
     "El Consejo de Ministros ha autorizado el convenio que regula la financiación estatal de IFMIF-DONES hasta 2030."),
    ("canal.ugr.es", "Canal UGR", "es", "2024-04-29", "noticia/investigadores-ugr-ifmif-dones-materiales",
     "Investigadores de la UGR diseñan sensores para IFMIF-DONES",
     None,
     "Un equipo de investigadores de la Universidad de Granada diseña los sensores de temperatura del módulo de ensayo de IFMIF-DONES."),
    ("ifmif-dones.es", "IFMIF-DONES España", "es", "2024-05-14", "noticias/hito-primer-modulo-acelerador",
     "Primer módulo del acelerador llega a la sede de Escúzar",
     None,
     "El primer módulo del acelerador de IFMIF-DONES ha llegado a las instalaciones de Escúzar tras su fabricación en Italia."),
    ("www.granadadigital.es", "Granada Digital", "es", "2024-06-20", "ifmif-dones-jornada-empresas-granada/",
     "Jornada empresarial sobre las oportunidades de IFMIF-DONES",
     None,
     "La Cámara de Comercio de Granada acogió una jornada sobre las oportunidades de negocio de IFMIF-DONES para la industria local."),
    ("www.noticiasdegranada.es", "Noticias de Granada", "es", "2024-02-03", "provincia/2024/02/ifmif-dones-plan-urbanistico",
     "Escúzar aprueba el plan urbanístico del entorno de IFMIF-DONES",
     None,
     "El pleno de Escúzar aprobó el plan urbanístico que ordenará el entorno de IFMIF-DONES y reserva suelo para empresas."),
]

PARAGRAPHS = {
    "es": [
        "Según fuentes del consorcio, el paso forma parte del calendario previsto para {year} y no altera el presupuesto global de la infraestructura.",
        "La instalación, impulsada por el Gobierno de España, la Junta de Andalucía y la Comisión Europea, es una pieza clave del programa europeo de fusión.",
        "Los responsables del proyecto recordaron que las obras se desarrollan en la parcela de {acres} hectáreas cedida por el municipio.",
    ],
    "en": [
        "Officials said the step was part of the schedule foreseen for {year} and would not change the overall budget of the facility.",
        "The facility is backed by Spain, the regional government of Andalusia and the European Commission and forms part of the European fusion roadmap.",
        "Project managers noted that the works are taking place on a {acres}-hectare plot provided by the local council.",
    ],
    "fr": [
        "Selon le consortium, cette étape fait partie du calendrier prévu pour {year} et ne modifie pas le budget global de l'installation.",
        "L'installation est soutenue par l'Espagne, l'Andalousie et la Commission européenne dans le cadre de la feuille de route européenne sur la fusion.",
        "Les responsables rappellent que les travaux se déroulent sur une parcelle de {acres} hectares mise à disposition par la commune.",
    ],
    "it": [
        "Secondo il consorzio, il passo fa parte del calendario previsto per il {year} e non modifica il bilancio complessivo della struttura.",
        "La struttura è sostenuta dalla Spagna, dall'Andalusia e dalla Commissione europea ed è parte della tabella di marcia europea sulla fusione.",
        "I responsabili del progetto ricordano che i lavori si svolgono su un terreno di {acres} ettari messo a disposizione dal comune.",
    ],
    "hr": [
        "Prema konzorciju, taj je korak dio plana za {year} i ne mijenja ukupni proračun postrojenja.",
        "Postrojenje podupiru Španjolska, Andaluzija i Europska komisija, a dio je europskog plana za fuziju.",
        "Voditelji projekta podsjećaju da se radovi odvijaju na zemljištu od {acres} hektara koje je osigurala općina.",
    ],
}

CHROME = """<!DOCTYPE html>
<html lang="{lang}"><head><meta charset="utf-8"><title>{title} | {outlet}</title>
{meta}</head><body>
<header class="site-header"><a href="/">{outlet}</a><p>Edición digital</p></header>
<nav class="main-menu"><ul><li><a href="/">Portada</a></li><li><a href="/ciencia">Ciencia</a></li><li><a href="/economia">Economía</a></li></ul></nav>
<main><article>
<h1>{title}</h1>
{body}
</article></main>
<aside class="related"><p>Te puede interesar: las noticias más leídas de hoy en {outlet} sobre política, deportes y cultura.</p></aside>
<footer><p>© 2024 {outlet}. Todos los derechos reservados. Aviso legal y política de cookies.</p></footer>
</body></html>
"""


def page(lang: str, title: str, outlet: str, paragraphs: list[str], meta: str = "", extra: str = "") -> str:
    body = "\n".join(f"<p>{html.escape(p)}</p>" for p in paragraphs) + extra
    return CHROME.format(lang=lang, title=html.escape(title), outlet=html.escape(outlet), meta=meta, body=body)


def build() -> dict:
    articles = []
    for n, (host, outlet, lang, day, path, headline, byline, lead) in enumerate(ARTICLES):
        url = f"http://{host}/{path}"
        extra_paras = [p.format(year=day[:4], acres=30 + n) for p in PARAGRAPHS[lang]]
        paragraphs = ([byline] if byline else []) + [lead] + extra_paras
        meta = f'<meta property="og:image" content="http://{host}/img/{n:03d}.jpg">'
        extra = ""
        if n == 2:  # metered article: teaser plus a subscription wall
            paragraphs = [lead]
            extra = '\n<div class="paywall"><p>Suscríbete para seguir leyendo.</p></div>'
        doc = {
            "url": url,
            "headline": headline,
            "outlet": outlet,
            "language": lang,
            "published": day,
            "contains_keyword": True,
            "body_html": page(lang, headline, outlet, paragraphs, meta, extra),
            "body_text": "\n".join(paragraphs),
        }
        articles.append(doc)

    # ideal.es article whose primary URL is down; the AMP mirror is found by a headline search
    flaky = articles[5]
    flaky["status"] = "unavailable"
    flaky["mirrors"] = [flaky["url"].replace("/granada/", "/granada/amp/")]

    off_topic = [
        ("http://www.diariodesevilla.es/andalucia/2024/03/14/iter-retraso-ensamblaje.html", "Diario de Sevilla", "es",
         "El reactor ITER vuelve a retrasar su primer plasma hasta 2035",
         ["El proyecto internacional ITER ha anunciado un nuevo retraso en el calendario de su primer plasma, que se sitúa ya en 2035.",
          "La organización atribuye el retraso a defectos en varios sectores de la cámara de vacío detectados durante el montaje.",
          "El coste total del reactor experimental supera ya los veinte mil millones de euros, según estimaciones independientes."]),
        ("http://www.newscientist.com/article/2420001-private-fusion-startups-funding/", "New Scientist", "en",
         "Private fusion start-ups raised record funding in 2024",
         ["Private fusion companies raised more money in the past twelve months than in any previous year, an industry survey shows.",
          "Most of the funding went to magnetic confinement designs, while laser-driven concepts attracted a smaller share.",
          "Investors remain cautious about timelines, with few expecting commercial electricity before the late 2030s."]),
    ]
    for url, outlet, lang, headline, paragraphs in off_topic:
        articles.append({
            "url": url, "headline": headline, "outlet": outlet, "language": lang, "published": "2024-03-14",
            "contains_keyword": False, "body_html": page(lang, headline, outlet, paragraphs),
            "body_text": "\n".join(paragraphs),
        })

    placeholder = (
        "The article could not be accessed. The content discusses the IFMIF-DONES project, an international "
        "fusion materials facility in Granada, Spain, highlighting its importance for the future of fusion energy, "
        "its funding by European and Spanish institutions, and its expected impact on scientific research and the "
        "local economy. No further details are available."
    )
    stuffing = ", ".join([
        TOPIC.lower(), "fusion", "neutron", "granada", "iter", "free video", "hd stream", "live cams", "hot",
        "webcam", "dating", "chat", "xxx", "clips", "trending", "viral", "news today", "breaking",
    ])
    noise = [
        {"kind": "pdf", "url": "http://www.ugr.es/sites/default/files/ifmif-dones-informe-2024.pdf",
         "headline": "[PDF] Informe técnico IFMIF-DONES 2024", "outlet": "ugr.es", "payload": "informe"},
        {"kind": "pdf", "url": "http://www.juntadeandalucia.es/export/drupaljda/ifmif-dones-plan-estrategico.pdf",
         "headline": "Plan estratégico IFMIF-DONES (PDF)", "outlet": "Junta de Andalucía", "payload": "plan"},
        {"kind": "pdf", "url": "http://www.iaea.org/sites/default/files/fec2023-ifmif-dones-status.pdf",
         "headline": "Status of the IFMIF-DONES project - IAEA FEC 2023", "outlet": "iaea.org", "payload": "fec"},
        {"kind": "image", "url": "http://www.granadahoy.com/media/ifmif-dones-maqueta.png",
         "headline": "Maqueta de IFMIF-DONES en Escúzar", "outlet": "Granada Hoy", "payload": "img"},
        {"kind": "audio", "url": "http://www.cadenaser.com/audio/ifmif-dones-entrevista-director.mp3",
         "headline": "Entrevista al director de IFMIF-DONES (audio)", "outlet": "Cadena SER", "payload": "mp3"},
        {"kind": "video", "url": "http://www.rtve.es/v/ifmif-dones-reportaje.mp4",
         "headline": "Reportaje en vídeo: IFMIF-DONES por dentro", "outlet": "RTVE", "payload": "mp4"},
        {"kind": "archive", "url": "http://www.ciemat.es/docs/ifmif-dones-dossier-prensa.zip",
         "headline": "Dossier de prensa IFMIF-DONES (ZIP)", "outlet": "CIEMAT", "payload": "zip"},
        {"kind": "executable", "url": "http://downloads.fusionviewer.example/ifmif-dones-3d-viewer.exe",
         "headline": "IFMIF-DONES 3D viewer download", "outlet": "fusionviewer", "payload": "exe"},
        {"kind": "homepage", "url": "http://www.teleprensa.es/",
         "headline": "IFMIF-DONES: toda la actualidad en Teleprensa", "outlet": "Teleprensa",
         "payload": page("es", "Teleprensa - Portada", "Teleprensa", [
             "Últimas noticias de Granada, Almería, Jaén y Málaga actualizadas al minuto.",
             "Deportes, cultura, economía y sucesos de toda Andalucía en un solo lugar.",
         ])},
        {"kind": "section_index", "url": "http://www.eluniversal.com.mx/seccion/ciencia/",
         "headline": "Ciencia y salud: IFMIF-DONES y más noticias - El Universal", "outlet": "El Universal",
         "payload": page("es", "Ciencia y salud", "El Universal", [
             "Las noticias más recientes de ciencia, salud y tecnología en México y el mundo.",
             "Consulta nuestra cobertura sobre espacio, medicina, medio ambiente y descubrimientos científicos.",
         ])},
        {"kind": "placeholder_text", "url": "http://www.granadaimedia.example/2024/02/ifmif-dones-apoyo-institucional",
         "headline": "Amplio apoyo institucional a IFMIF-DONES", "outlet": "Granada iMedia", "payload": ""},
        {"kind": "placeholder_text", "url": "http://www.andaluciainformacion.example/2024/04/dones-nuevo-hito",
         "headline": "IFMIF-DONES alcanza un nuevo hito en su construcción", "outlet": "Andalucía Información", "payload": ""},
        {"kind": "placeholder_text", "url": "http://www.energias-renovables.example/2024/05/fusion-espana-dones",
         "headline": "España refuerza su papel en la fusión con IFMIF-DONES", "outlet": "Energías Renovables", "payload": ""},
        {"kind": "adult_seo", "url": "http://hot-streams-fr.example/ifmif-dones-video-hd",
         "headline": "IFMIF-DONES video HD stream gratuit", "outlet": "hot-streams-fr",
         "payload": page("fr", "Live cams HD", "Hot Streams", [
             "Regardez gratuitement des milliers de vidéos en direct, sans inscription et en haute définition.",
             "Nouveaux profils chaque jour, chat illimité et clips exclusifs pour les membres.",
         ], meta=f'<meta name="keywords" content="{stuffing}">')},
        {"kind": "adult_seo", "url": "http://clips-24.example/de/ifmif-dones-live",
         "headline": "IFMIF-DONES live clips kostenlos", "outlet": "clips-24",
         "payload": page("de", "Kostenlose Clips", "Clips 24", [
             "Tausende Clips kostenlos und ohne Anmeldung ansehen, jeden Tag neue Videos in bester Qualität.",
             "Jetzt registrieren und exklusive Inhalte freischalten, Chat rund um die Uhr verfügbar.",
         ], meta=f'<meta name="keywords" content="{stuffing}">')},
    ]

    a = {d["url"]: d for d in articles}
    urls = [d["url"] for d in articles]
    noise_urls = [d["url"] for d in noise]

    # a shortener chain and a tracking-parameter hop in front of two articles
    redirects = {
        "http://sim.lnk.example/eP24": "http://sim.lnk.example/eP24/go",
        "http://sim.lnk.example/eP24/go": urls[10],
        urls[3] + "?utm_source=googlenews&utm_medium=referral": urls[3],
    }

    def e(url, time=None, headline=None, via=None):
        entry = {"url": url}
        if time is not None:
            entry["time"] = time
        if headline is not None:
            entry["headline"] = headline
        if via is not None:
            entry["via"] = via
        return entry

    def dated(i):
        return e(urls[i], a[urls[i]]["published"] + "T08:00:00Z")

    q = TOPIC
    listings = {
        f"es:ES|{q}": [dated(0), dated(2), e(urls[3], "2024-03-03T08:00:00Z", via=[urls[3] + "?utm_source=googlenews&utm_medium=referral"]),
                        dated(4), dated(7), e(urls[10], "2024-01-30T08:00:00Z", via=["http://sim.lnk.example/eP24"]),
                        dated(12), dated(25), e(noise_urls[0], "2024-02-01T08:00:00Z"), e(noise_urls[8]),
                        e(noise_urls[10], "2024-02-05T08:00:00Z"), e(urls[30], "2024-03-14T08:00:00Z")],
        f"es:MX|{q}": [e(urls[0], "hace 2 días"), dated(4), dated(13), dated(14), e(noise_urls[9]),
                        dated(12), e(urls[2], "2024-02-08T08:00:00Z")],
        f"en:US|{q}": [dated(15), dated(16), dated(17), dated(19), dated(20), dated(24), e(noise_urls[2], "2023-10-20T08:00:00Z"),
                        e(noise_urls[3], "2024-02-10T08:00:00Z"), e(urls[31], "2024-03-14T08:00:00Z")],
        f"fr:BE|{q}": [dated(21), e(noise_urls[13], "hace 3 horas"), e(noise_urls[4], "2024-03-01T08:00:00Z")],
        f"de:DE|{q}": [e(noise_urls[14], "2 hours ago"), e(noise_urls[5], "2024-02-27T08:00:00Z"), dated(17)],
        f"it:IT|{q}": [dated(22), dated(23), e(noise_urls[6], "2024-04-01T08:00:00Z"), e(noise_urls[7])],
        # month segments on es:ES
        f"es:ES|{q} after:2024-01-01 before:2024-01-31": [dated(0), dated(4), dated(10)],
        f"es:ES|{q} after:2024-02-01 before:2024-02-29": [dated(7), dated(2), dated(29), e(noise_urls[11], "2024-02-14T08:00:00Z")],
        f"es:ES|{q} after:2024-03-01 before:2024-03-31": [dated(3), dated(26), dated(8)],
        f"es:ES|{q} after:2024-04-01 before:2024-04-30": [dated(5), dated(11), dated(27)],
        f"es:ES|{q} after:2024-05-01 before:2024-05-31": [dated(1), dated(9), e(noise_urls[12], "2024-05-20T08:00:00Z")],
        f"es:ES|{q} after:2024-06-01 before:2024-06-30": [dated(6), dated(28)],
        # ISO-restricted searches
        f"es:ES|{q} site:es": [dated(5), dated(26), dated(27), e(noise_urls[1], "2024-01-10T08:00:00Z")],
        f"es:ES|{q} site:mx": [dated(14)],
        f"en:US|{q} site:uk": [dated(15)],
        f"fr:BE|{q} site:be": [],
        # domain expansion
        f"es:ES|{q} site:ideal.es": [dated(4), dated(6), dated(5)],
        f"es:ES|{q} site:granadahoy.com": [dated(7), dated(8), dated(9)],
        f"es:ES|{q} site:elpais.com": [dated(0), dated(1)],
        f"en:US|{q} site:world-nuclear-news.org": [dated(17), dated(18)],
        f"en:US|{q} site:sciencebusiness.net": [dated(19)],
        f"en:US|{q} site:linkedin.com": [dated(24)],
        # headline backfill finds the mirror of the unavailable article
        f'es:ES|"{a[urls[5]]["headline"]}"': [e(flaky["mirrors"][0], a[urls[5]]["published"] + "T08:00:00Z")],
    }
    return {
        "aggregator_host": "news.simnews.test",
        "placeholder_text": placeholder,
        "articles": articles,
        "noise": noise,
        "redirects": redirects,
        "listings": listings,
    }


def main(argv: list[str]) -> int:
    out = Path(argv[1]) if len(argv) > 1 else OUT
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(build(), ensure_ascii=False, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
